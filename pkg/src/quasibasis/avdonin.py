"""Avdonin-style certification of a block enumeration.

Three conditions are checked: (a) separation, (b) bounded deviations
delta_j = lambda_j - j/k with sup |delta_j| <= R ||beta|| + 1, and (c) the
quarter-in-the-mean condition.  The primitive statistic for (c) is

    D(N) = sup_n | (1/N) sum_{j=k*n+1}^{k*(n+N)} delta_j  -  c*k |

over block-aligned windows of N blocks, with the analytic constant

    c = (1/k) * integral_{T^d} phi(x) dx - (k+1)/(2k),
    phi(x) = sum_{m in Z^d} <x + m, beta> 1_S(x + m).

D(N) -> 0 by well-distribution of the alpha orbit; D(N) < 1/(4k) implies the
aligned condition (c) with margin, since block-aligned index means deviate
from c by exactly D(N)/k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryHit,
    ConditionAFailed,
    ConditionBFailed,
    ConditionCNotObserved,
    EnumerationTooShort,
    InvalidRegion,
    QuadratureNotConverged,
)
from .geometry import BoxUnionRegion, IndicatorRegion, as_vector, bounding_radius
from .quasicrystal import BlockEnumeration, separation_gap

MIN_WINDOWS = 100


def _phi_batch(pts, region, beta):
    """phi at a batch of points; returns (values, boundary_mask)."""
    pts = np.asarray(pts, dtype=float)
    d = region.dim
    lo, hi = region.bbox
    widths = np.ceil(hi - lo).astype(int) + 3
    axes = [np.arange(w) for w in widths]
    grids = np.meshgrid(*axes, indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    values = np.empty(pts.shape[0])
    boundary = np.zeros(pts.shape[0], dtype=bool)
    chunk = 4096
    for start in range(0, pts.shape[0], chunk):
        X = pts[start:start + chunk]
        base = np.floor(lo[None, :] - X).astype(np.int64) - 1
        m = base[:, None, :] + offs[None, :, :]
        y = X[:, None, :] + m.astype(float)
        counts, bnd = region.membership_counts(y.reshape(-1, d))
        counts = counts.reshape(X.shape[0], -1)
        bnd = bnd.reshape(X.shape[0], -1)
        boundary[start:start + chunk] = bnd.any(axis=1)
        weights = np.einsum("cpd,d->cp", y, beta)
        values[start:start + chunk] = (weights * counts).sum(axis=1)
    return values, boundary


def phi(x, region, beta) -> float:
    """Lattice-periodized weight sum_m <x+m, beta> 1_S(x+m).

    1-periodic in every coordinate.  Raises BoundaryHit when any contributing
    shift lands within the boundary tolerance.
    """
    x = as_vector(x, region.dim)
    beta = as_vector(beta, region.dim)
    vals, bnd = _phi_batch(x[None, :], region, beta)
    if bnd[0]:
        raise BoundaryHit(f"phi argument {x.tolist()} meets a region boundary")
    return float(vals[0])


class PeriodizedWeight:
    """Cached evaluator for the periodized weight of a fixed region and beta."""

    def __init__(self, region, beta):
        self.region = region
        self.beta = as_vector(beta, region.dim)
        self._cache = {}

    def value(self, x) -> float:
        x = as_vector(x, self.region.dim)
        key = np.round(np.mod(x, 1.0), 12).tobytes()
        if key not in self._cache:
            self._cache[key] = phi(x, self.region, self.beta)
        return self._cache[key]


def torus_integral_phi(region, beta) -> float:
    """Integral of phi over the unit torus; equals integral_S <x, beta> dx.

    Closed form per box: volume times <centroid, beta>.  Indicator regions
    use midpoint quadrature refined until 1e-6 relative change.
    """
    beta = as_vector(beta, region.dim)
    if isinstance(region, BoxUnionRegion):
        lo = region.boxes[:, 0, :]
        hi = region.boxes[:, 1, :]
        vols = np.prod(hi - lo, axis=1)
        centroids = 0.5 * (lo + hi)
        return float(np.sum(vols * (centroids @ beta)))
    if isinstance(region, IndicatorRegion):
        lo, hi = region.bbox
        d = region.dim

        def level(n):
            axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(n) + 0.5) / n for i in range(d)]
            grids = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=1)
            counts, _ = region.membership_counts(pts)
            cell = np.prod((hi - lo) / n)
            return float(np.sum(counts * (pts @ beta)) * cell)

        return _refine_until_stable(level, d)
    raise InvalidRegion(f"unsupported region type {type(region)!r}")


def _refine_until_stable(level, dim, tol=1e-6):
    """Dyadic refinement until two consecutive changes fall below tol.

    A single small change is not trusted: midpoint sums of jump integrands
    can repeat exactly between aligned levels while still biased.
    """
    max_n = 2 ** 20 if dim == 1 else (2048 if dim == 2 else 128)
    prev = None
    small_changes = 0
    n = 32
    while n <= max_n:
        val = level(n)
        if prev is not None:
            if abs(val - prev) <= tol * max(1.0, abs(val)):
                small_changes += 1
                if small_changes >= 2:
                    return val
            else:
                small_changes = 0
        prev = val
        n *= 2
    raise QuadratureNotConverged(
        f"indicator quadrature did not reach {tol} relative change by n={max_n}"
    )


def constant_c(region, beta, k) -> float:
    """Analytic mean-deviation constant (1/k) * integral(phi) - (k+1)/(2k)."""
    k = int(k)
    if k < 1:
        raise InvalidRegion("k must be >= 1")
    return torus_integral_phi(region, beta) / k - (k + 1) / (2.0 * k)


def block_sum_identity_check(enum: BlockEnumeration, region, params, r_range) -> float:
    """Max residual of the per-block identity sum(delta) = phi(r alpha) - (k+1)/2.

    Both sides are evaluated independently: the left from the enumeration,
    the right from the periodized weight at the orbit points.
    """
    r_range = int(r_range)
    if enum.n_min > -r_range or enum.n_max < r_range:
        raise EnumerationTooShort(
            f"enumeration covers blocks [{enum.n_min}, {enum.n_max}], "
            f"need [-{r_range}, {r_range}]"
        )
    rs = np.arange(-r_range, r_range + 1)
    k = enum.k
    offset = (rs[0] - enum.n_min) * k
    deltas = enum.delta[offset: offset + rs.size * k].reshape(rs.size, k)
    lhs = deltas.sum(axis=1)
    pts = rs[:, None].astype(float) * params.alpha[None, :]
    vals, bnd = _phi_batch(pts, region, params.beta)
    if bnd.any():
        raise BoundaryHit(
            f"phi hit a boundary at r={int(rs[np.argmax(bnd)])}; "
            "apply a generic translation first"
        )
    rhs = vals - (k + 1) / 2.0
    return float(np.max(np.abs(lhs - rhs)))


def window_deviation(enum: BlockEnumeration, c, N) -> float:
    """Sliding-window statistic D(N) over block-aligned windows of N blocks.

    Windows of k*N consecutive indices are normalized by 1/N and compared
    against c*k; the sup runs over all windows fully inside the enumeration
    after discarding k*N indices at each end.  Requires at least MIN_WINDOWS
    admissible windows.
    """
    N = int(N)
    if N < 1:
        raise InvalidRegion("N must be >= 1")
    blocks = enum.block_count
    starts = blocks - 3 * N + 1
    if starts < MIN_WINDOWS:
        raise EnumerationTooShort(
            f"{blocks} blocks allow {max(starts, 0)} windows at N={N}, "
            f"need {MIN_WINDOWS}"
        )
    k = enum.k
    prefix = np.concatenate([[0.0], np.cumsum(enum.delta)])
    s = np.arange(N, blocks - 2 * N + 1)
    sums = prefix[(s + N) * k] - prefix[s * k]
    return float(np.max(np.abs(sums / N - c * k)))


@dataclass
class AvdoninReport:
    """Condition report for one enumeration."""

    gap: float
    delta_sup: float
    delta_bound: float
    c: float
    deviations: list
    smallest_passing_N: object
    threshold: float
    kadec_n1: bool

    def to_json_dict(self):
        return {
            "gap": self.gap,
            "delta_sup": self.delta_sup,
            "delta_bound": self.delta_bound,
            "c": self.c,
            "threshold": self.threshold,
            "deviations": [
                {"N": int(n), "deviation": float(v)} for n, v in self.deviations
            ],
            "smallest_passing_N": self.smallest_passing_N,
            "kadec_n1": self.kadec_n1,
        }


def kadec_check(enum: BlockEnumeration, k=None) -> bool:
    """Single-index (N=1) check: sup_j |delta_j - mean(delta)| < 1/(4k)."""
    k = enum.k if k is None else int(k)
    c = float(np.mean(enum.delta))
    return bool(np.max(np.abs(enum.delta - c)) < 1.0 / (4.0 * k))


def check_conditions(
    enum: BlockEnumeration,
    region=None,
    params=None,
    *,
    c=None,
    n_grid=(10, 100, 1000, 10000),
) -> AvdoninReport:
    """Check separation, boundedness, and the mean-deviation condition.

    c is computed analytically from the region unless given explicitly (the
    synthetic-enumeration path).  Deviations are probed on the geometric N
    grid; grid points the enumeration cannot support are skipped, but at
    least one must fit.  Raises ConditionAFailed / ConditionBFailed /
    ConditionCNotObserved with the report attached.
    """
    if c is None:
        if region is None or params is None:
            raise InvalidRegion("need region and params, or an explicit c")
        c = constant_c(region, params.beta, enum.k)
    c = float(c)
    if region is not None and params is not None:
        bound = bounding_radius(region) * float(np.linalg.norm(params.beta)) + 1.0
    else:
        bound = float("inf")
    gap = separation_gap(enum)
    delta_sup = float(np.max(np.abs(enum.delta)))
    threshold = 1.0 / (4.0 * enum.k)

    deviations = []
    for N in n_grid:
        try:
            deviations.append((int(N), window_deviation(enum, c, N)))
        except EnumerationTooShort:
            continue
    if not deviations:
        raise EnumerationTooShort(
            f"enumeration too short for every N in grid {tuple(n_grid)}"
        )
    smallest = next((n for n, v in deviations if v < threshold), None)
    report = AvdoninReport(
        gap=gap,
        delta_sup=delta_sup,
        delta_bound=bound,
        c=c,
        deviations=deviations,
        smallest_passing_N=smallest,
        threshold=threshold,
        kadec_n1=kadec_check(enum),
    )
    if not gap > 0.0:
        raise ConditionAFailed(f"separation gap {gap} is not positive", report=report)
    if delta_sup > bound + 1e-9:
        raise ConditionBFailed(
            f"sup |delta| = {delta_sup} exceeds bound {bound}", report=report
        )
    if smallest is None:
        raise ConditionCNotObserved(
            f"no N in {tuple(n_grid)} brought the deviation below {threshold}",
            report=report,
        )
    return report
