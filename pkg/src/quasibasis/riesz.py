"""Truncated exponential Gram matrices and frame-bound estimates.

Gram entries are inner products of exponentials e^{2 pi i <lambda, x>} over
the region (d-dimensional systems) or over [0, k) (1-dimensional systems).
The extreme eigenvalues of a truncated Gram matrix are a surrogate for the
Riesz bounds: the report language is "no instability observed up to order X",
never a proof.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    DuplicateFrequency,
    EigensolverNotConverged,
    InvalidRegion,
    QuadratureNotConverged,
)
from .geometry import BoxUnionRegion, IndicatorRegion, measure

DENSE_EIG_MAX_ORDER = 512
RANK_COLLAPSE_TOL = 1e-8


def thread_cap() -> int:
    """Worker cap for order sweeps, from QUASIBASIS_THREADS (default 1)."""
    raw = os.environ.get("QUASIBASIS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ft_region(region, xi):
    """Fourier transform integral_S exp(-2 pi i <xi, x>) dx.

    xi may be a single vector or an (..., d) array.  Box unions evaluate the
    per-axis closed form L * sinc(xi L) * exp(-i pi xi (lo + hi)), which is
    cancellation-free for all xi and hits the xi -> 0 limit exactly.
    Indicator regions fall back to refined midpoint quadrature (1e-6 relative).
    """
    xi = np.asarray(xi, dtype=float)
    scalar = xi.ndim == 1
    if scalar:
        xi = xi[None, :]
    d = region.dim
    if xi.shape[-1] != d:
        raise InvalidRegion(f"frequency dimension {xi.shape[-1]} != region dimension {d}")
    if isinstance(region, BoxUnionRegion):
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for box in region.boxes:
            lo, hi = box[0], box[1]
            L = hi - lo
            factors = L * np.sinc(xi * L) * np.exp(-1j * np.pi * xi * (lo + hi))
            out += np.prod(factors, axis=-1)
        return out[0] if scalar else out
    if isinstance(region, IndicatorRegion):
        out = np.array([_ft_indicator(region, v) for v in xi.reshape(-1, d)])
        out = out.reshape(xi.shape[:-1])
        return out[0] if scalar else out
    raise InvalidRegion(f"unsupported region type {type(region)!r}")


def _ft_indicator(region, xi, tol=1e-6):
    lo, hi = region.bbox
    d = region.dim
    max_n = 2 ** 20 if d == 1 else (2048 if d == 2 else 128)
    prev = None
    small_changes = 0
    n = 32
    # two consecutive small changes required: midpoint sums of jump
    # integrands can repeat exactly between aligned levels while biased
    while n <= max_n:
        axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(n) + 0.5) / n for i in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        counts, _ = region.membership_counts(pts)
        cell = np.prod((hi - lo) / n)
        val = complex(np.sum(counts * np.exp(-2j * np.pi * (pts @ xi))) * cell)
        if prev is not None:
            if abs(val - prev) <= tol * max(1.0, abs(val)):
                small_changes += 1
                if small_changes >= 2:
                    return val
            else:
                small_changes = 0
        prev = val
        n *= 2
    raise QuadratureNotConverged(f"indicator transform did not converge at xi={xi.tolist()}")


@dataclass
class GramMatrix:
    """Hermitian Gram matrix of a finite exponential system."""

    order: int
    entries: np.ndarray
    frequencies: np.ndarray
    diagonal_value: float
    kind: str


def _check_distinct(freqs, allow_duplicates):
    arr = freqs if freqs.ndim == 2 else freqs[:, None]
    uniq = np.unique(arr, axis=0)
    if uniq.shape[0] != arr.shape[0] and not allow_duplicates:
        raise DuplicateFrequency(
            f"{arr.shape[0] - uniq.shape[0]} duplicate frequencies in the list"
        )


def gram_dd(frequencies, region, allow_duplicates=False) -> GramMatrix:
    """Gram matrix G_{jl} = ft_region(region, lambda_l - lambda_j).

    Hermitian with diagonal equal to the region measure.
    """
    F = np.asarray(frequencies, dtype=float)
    if F.ndim != 2:
        raise InvalidRegion("expected an (n, d) frequency array")
    _check_distinct(F, allow_duplicates)
    diffs = F[None, :, :] - F[:, None, :]
    G = ft_region(region, diffs)
    return GramMatrix(
        order=F.shape[0],
        entries=G,
        frequencies=F,
        diagonal_value=measure(region),
        kind="region",
    )


def gram_1d(frequencies, k, allow_duplicates=False) -> GramMatrix:
    """Gram matrix of exponentials on [0, k).

    G_{jl} = (exp(2 pi i k D) - 1) / (2 pi i D) for D = lambda_l - lambda_j,
    evaluated in the stable phase * sinc form; the diagonal is k.
    """
    lam = np.asarray(frequencies, dtype=float)
    if lam.ndim != 1:
        raise InvalidRegion("expected a 1-dimensional frequency array")
    k = int(k)
    _check_distinct(lam, allow_duplicates)
    D = lam[None, :] - lam[:, None]
    denom = np.where(D == 0.0, 1.0, np.pi * D)
    G = np.exp(1j * np.pi * k * D) * np.sin(np.pi * k * D) / denom
    G[D == 0.0] = float(k)
    return GramMatrix(
        order=lam.shape[0],
        entries=G.astype(complex),
        frequencies=lam,
        diagonal_value=float(k),
        kind="interval",
    )


@dataclass
class FrameReport:
    """Extreme eigenvalues and condition number of one Gram matrix."""

    order: int
    lambda_min: float
    lambda_max: float
    condition_number: float

    def to_json_dict(self):
        return {
            "order": self.order,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "condition_number": self.condition_number,
        }


def frame_bounds(gram: GramMatrix) -> FrameReport:
    """Extreme eigenvalues of a Hermitian Gram matrix.

    Full decomposition up to order 512; above that an iterative extremal
    solver (spectral flip for the small end, so shift-invert factorizations
    of near-singular matrices are never needed).
    """
    H = gram.entries
    n = H.shape[0]
    if n <= DENSE_EIG_MAX_ORDER:
        w = np.linalg.eigvalsh(H)
        lmin, lmax = float(w[0]), float(w[-1])
    else:
        try:
            lmax = float(spla.eigsh(H, k=1, which="LA", tol=1e-9,
                                    return_eigenvectors=False)[0])
            shift = lmax + max(1.0, abs(lmax)) * 1e-3
            flipped = shift * np.eye(n) - H
            top = float(spla.eigsh(flipped, k=1, which="LA", tol=1e-9,
                                   return_eigenvectors=False)[0])
            lmin = shift - top
        except spla.ArpackNoConvergence as exc:
            raise EigensolverNotConverged(str(exc)) from exc
    lmin = max(lmin, 0.0)
    cond = float("inf") if lmin <= 1e-13 else lmax / lmin
    return FrameReport(order=n, lambda_min=lmin, lambda_max=lmax,
                       condition_number=cond)


def centered_point_slice(points, order):
    """The `order` points nearest the origin (norm, then lexicographic)."""
    P = np.asarray(points, dtype=float)
    if order > P.shape[0]:
        raise InvalidRegion(f"need {order} points, have {P.shape[0]}")
    keys = tuple(P[:, i] for i in range(P.shape[1] - 1, -1, -1))
    idx = np.lexsort(keys + (np.linalg.norm(P, axis=1),))
    return P[np.sort(idx[:order])]


def integer_frequency_grid(d, order):
    """The `order` integer vectors nearest the origin in Z^d."""
    M = int(np.ceil((order ** (1.0 / d)) / 2.0)) + 1
    axes = [np.arange(-M, M + 1)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    return centered_point_slice(pts, order)


@dataclass
class TrendResult:
    """Frame reports over increasing truncation orders."""

    reports: list
    condition_ratio: float

    def to_json_dict(self):
        return {
            "reports": [r.to_json_dict() for r in self.reports],
            "condition_ratio": self.condition_ratio,
        }


def _gram_for(frequencies, order, region, k, allow_duplicates):
    f = np.asarray(frequencies)
    if f.ndim == 2:
        sliced = centered_point_slice(f, order)
        return gram_dd(sliced, region, allow_duplicates=allow_duplicates)
    idx = np.argsort(np.abs(f - np.median(f)), kind="stable")[:order]
    sliced = f[np.sort(idx)]
    return gram_1d(sliced, k, allow_duplicates=allow_duplicates)


def riesz_trend(frequencies, orders, *, region=None, k=None,
                allow_duplicates=False) -> TrendResult:
    """Frame reports for centered slices of a frequency set at each order.

    1-dimensional input needs k (system on [0, k)); (n, d) input needs the
    region.  The summary ratio compares the worst condition number to the
    first.  Order sweeps run in parallel up to the QUASIBASIS_THREADS cap;
    results do not depend on the worker count.
    """
    orders = [int(o) for o in orders]
    if orders != sorted(orders):
        raise InvalidRegion("orders must be increasing")
    f = np.asarray(frequencies)
    if f.ndim == 2 and region is None:
        raise InvalidRegion("d-dimensional frequencies need a region")
    if f.ndim == 1 and k is None:
        raise InvalidRegion("1-dimensional frequencies need k")

    def one(order):
        return frame_bounds(_gram_for(f, order, region, k, allow_duplicates))

    cap = thread_cap()
    if cap > 1 and len(orders) > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            reports = list(pool.map(one, orders))
    else:
        reports = [one(o) for o in orders]
    conds = [r.condition_number for r in reports]
    ratio = float("inf") if any(np.isinf(c) for c in conds) else max(conds) / conds[0]
    return TrendResult(reports=reports, condition_ratio=ratio)


@dataclass
class DualityReport:
    """Paired frame reports for the two sides of the same construction."""

    one_d: FrameReport
    d_dim: FrameReport
    both_stable: bool
    note: str

    def to_json_dict(self):
        return {
            "one_d": self.one_d.to_json_dict(),
            "d_dim": self.d_dim.to_json_dict(),
            "both_stable": self.both_stable,
            "note": self.note,
        }


def duality_cross_check(enum, points, region, order, allow_duplicates=False) -> DualityReport:
    """Frame reports for the 1-d system on [0, k) and the d-dim system on S.

    Both frequency sets must come from the same generator lattice.  The
    contract is qualitative: report both condition numbers, or diagnose which
    side collapses.
    """
    lam = enum.centered_slice(order)
    g1 = gram_1d(lam, enum.k, allow_duplicates=allow_duplicates)
    r1 = frame_bounds(g1)
    pts = centered_point_slice(points.points, order)
    gd = gram_dd(pts, region, allow_duplicates=allow_duplicates)
    rd = frame_bounds(gd)
    stable = (r1.lambda_min > RANK_COLLAPSE_TOL) and (rd.lambda_min > RANK_COLLAPSE_TOL)
    if stable:
        note = f"no instability observed up to order {order} on either side"
    else:
        side = "1-d" if r1.lambda_min <= RANK_COLLAPSE_TOL else "d-dim"
        note = f"rank collapse on the {side} side at order {order}"
    return DualityReport(one_d=r1, d_dim=rd, both_stable=stable, note=note)
