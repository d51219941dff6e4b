"""Cut-and-project point sets in R^{d+1} -> R^d x R and their enumeration.

The lattice Gamma and its dual Gamma* are parametrized by vectors alpha and
beta in R^d:

    Gamma  = { ((Id + beta alpha^T) m - beta n,  n - alpha^T m) }
    Gamma* = { (m + alpha n,  (1 + beta^T alpha) n + beta^T m) }

with (m, n) over Z^d x Z.  Projecting Gamma points whose last coordinate lies
in [0, k) gives the d-dimensional frequency set; projecting Gamma* points
whose first component lies in the region S gives the 1-dimensional set, which
splits into blocks of exactly k points when S k-tiles Z^d generically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BlockCardinalityViolation,
    EnumerationTooShort,
    IndependenceHeuristicFailed,
    InvalidRegion,
    WindowTooSmall,
)
from .geometry import as_vector
from .relations import assert_rationally_independent

_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53]


@dataclass
class CutProjectParams:
    """Dimension, multiplicity, and the projection direction vectors."""

    d: int
    k: int
    alpha: np.ndarray
    beta: np.ndarray


def make_params(d, k, alpha, beta) -> CutProjectParams:
    """Validate and freeze cut-and-project parameters.

    {1, alpha_1, ..., alpha_d} and {beta_1, ..., beta_d, 1 + beta.alpha} must
    both pass the rational-independence probe.
    """
    d = int(d)
    k = int(k)
    if d < 1 or k < 1:
        raise InvalidRegion("need d >= 1 and k >= 1")
    alpha = as_vector(alpha, d)
    beta = as_vector(beta, d)
    assert_rationally_independent([1.0, *alpha.tolist()], "{1, alpha}")
    assert_rationally_independent(
        [*beta.tolist(), 1.0 + float(beta @ alpha)], "{beta, 1 + beta.alpha}"
    )
    return CutProjectParams(d=d, k=k, alpha=alpha.copy(), beta=beta.copy())


def default_params(d, k, seed, beta_scale=0.25) -> CutProjectParams:
    """Concrete parameter choice: alpha from prime square roots, beta seeded.

    alpha_i = frac(sqrt(p_i)) over the first d primes; beta starts from the
    next d primes, gets a small seeded perturbation, and is rescaled so
    ||beta|| <= beta_scale (default 1/4).  Retries a few derived seeds if the
    independence probe rejects a draw.
    """
    d = int(d)
    if d > len(_PRIMES) // 2:
        raise InvalidRegion(f"default parameters support d <= {len(_PRIMES) // 2}")
    if not (0 < beta_scale <= 0.25):
        raise InvalidRegion("beta_scale must lie in (0, 1/4]")
    alpha = np.array([np.sqrt(p) % 1.0 for p in _PRIMES[:d]])
    base = np.array([np.sqrt(p) % 1.0 for p in _PRIMES[d:2 * d]])
    last_error = None
    for attempt in range(8):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(attempt,))
        rng = np.random.default_rng(ss)
        jitter = 1.0 + 1e-3 * rng.uniform(-1.0, 1.0, size=d)
        beta = base * jitter
        beta *= beta_scale * (1.0 - 0.01 * rng.uniform()) / np.linalg.norm(beta)
        try:
            return make_params(d, k, alpha, beta)
        except IndependenceHeuristicFailed as exc:
            last_error = exc
    raise last_error


@dataclass
class GammaGenerators:
    """Generator matrices: columns generate Gamma and Gamma*."""

    gamma_basis: np.ndarray
    gamma_star_basis: np.ndarray


def gamma_generators(params: CutProjectParams) -> GammaGenerators:
    """Assemble the (d+1)x(d+1) generator matrices from alpha and beta.

    The two bases are mutually dual: gamma_basis^T @ gamma_star_basis is the
    identity, and both determinants are +-1.
    """
    d = params.d
    a = params.alpha
    b = params.beta
    G = np.zeros((d + 1, d + 1))
    G[:d, :d] = np.eye(d) + np.outer(b, a)
    G[:d, d] = -b
    G[d, :d] = -a
    G[d, d] = 1.0
    Gs = np.zeros((d + 1, d + 1))
    Gs[:d, :d] = np.eye(d)
    Gs[:d, d] = a
    Gs[d, :d] = b
    Gs[d, d] = 1.0 + float(b @ a)
    gens = GammaGenerators(gamma_basis=G, gamma_star_basis=Gs)
    prod = G.T @ Gs
    if not np.allclose(prod, np.round(prod), atol=1e-9):
        raise InvalidRegion("gamma bases are not dual to integer precision")
    for M in (G, Gs):
        if abs(abs(np.linalg.det(M)) - 1.0) > 1e-9:
            raise InvalidRegion("gamma basis is not unimodular")
    return gens


@dataclass
class QuasicrystalPoints:
    """Window slice of the d-dimensional cut-and-project set.

    points[i] = m[i] - beta * (n[i] - alpha.m[i]) with the projection height
    n - alpha.m inside [0, k).  deduplicated counts points removed as exact
    duplicates (nonzero only for degenerate parameters such as beta = 0).
    """

    points: np.ndarray
    preimage_m: np.ndarray
    preimage_n: np.ndarray
    window: tuple
    interval: tuple
    deduplicated: int = 0

    def __len__(self):
        return self.points.shape[0]


def generate_lambda(params: CutProjectParams, window) -> QuasicrystalPoints:
    """Enumerate the d-dimensional point set inside a window box.

    For each integer m in the window plus a k*||beta|| margin, the admissible
    heights are the k consecutive integers n in [alpha.m, alpha.m + k).
    Points are filtered to the half-open window, deduplicated, and sorted
    lexicographically.
    """
    lo = as_vector(window[0], params.d)
    hi = as_vector(window[1], params.d)
    if np.any(hi <= lo):
        raise WindowTooSmall(f"window [{lo.tolist()}, {hi.tolist()}) is empty")
    margin = params.k * np.abs(params.beta) + 1.0
    axes = [
        np.arange(np.floor(lo[i] - margin[i]), np.ceil(hi[i] + margin[i]) + 1, dtype=np.int64)
        for i in range(params.d)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    m = np.stack([g.ravel() for g in grids], axis=1)
    am = m.astype(float) @ params.alpha
    n0 = np.ceil(am).astype(np.int64)
    pts = []
    ms = []
    ns = []
    for r in range(params.k):
        n = n0 + r
        height = n.astype(float) - am
        p1 = m.astype(float) - height[:, None] * params.beta[None, :]
        keep = np.all((p1 >= lo) & (p1 < hi), axis=1)
        pts.append(p1[keep])
        ms.append(m[keep])
        ns.append(n[keep])
    points = np.concatenate(pts, axis=0)
    preim_m = np.concatenate(ms, axis=0)
    preim_n = np.concatenate(ns, axis=0)
    if points.shape[0] == 0:
        raise WindowTooSmall("window contains no cut-and-project points")
    order = np.lexsort(tuple(points[:, i] for i in range(params.d - 1, -1, -1)))
    points = points[order]
    preim_m = preim_m[order]
    preim_n = preim_n[order]
    distinct = np.ones(points.shape[0], dtype=bool)
    if points.shape[0] > 1:
        distinct[1:] = np.any(points[1:] != points[:-1], axis=1)
    removed = int(points.shape[0] - distinct.sum())
    return QuasicrystalPoints(
        points=points[distinct],
        preimage_m=preim_m[distinct],
        preimage_n=preim_n[distinct],
        window=(lo, hi),
        interval=(0.0, float(params.k)),
        deduplicated=removed,
    )


@dataclass
class BlockEnumeration:
    """Sorted 1-dimensional enumeration lambda_j with block structure.

    Block n occupies indices j = k*n + 1 .. k*(n+1) and holds the k values
    n + <x, beta> over x in S intersected with (n*alpha + Z^d), sorted
    ascending within the block.  delta_j = lambda_j - j/k by construction.
    """

    k: int
    j: np.ndarray
    n: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    n_min: int
    n_max: int

    def __len__(self):
        return self.lam.shape[0]

    @property
    def block_count(self) -> int:
        return self.n_max - self.n_min + 1

    def centered_slice(self, order: int) -> np.ndarray:
        """The `order` values lambda_j with j closest to zero, sorted by j."""
        if order > len(self):
            raise EnumerationTooShort(
                f"need {order} entries, enumeration has {len(self)}"
            )
        pick = np.lexsort((self.j, np.abs(self.j)))[:order]
        pick = pick[np.argsort(self.j[pick])]
        return self.lam[pick]

    def with_lambdas(self, lam: np.ndarray) -> "BlockEnumeration":
        lam = np.asarray(lam, dtype=float)
        return BlockEnumeration(
            k=self.k,
            j=self.j.copy(),
            n=self.n.copy(),
            lam=lam,
            delta=lam - self.j / self.k,
            n_min=self.n_min,
            n_max=self.n_max,
        )

    @classmethod
    def from_lambdas(cls, lam, k, n_min) -> "BlockEnumeration":
        """Build an enumeration from raw lambda values (testing/synthetic).

        len(lam) must be a whole number of blocks; values are assigned to
        consecutive indices starting at j = k*n_min + 1.
        """
        lam = np.asarray(lam, dtype=float)
        k = int(k)
        if lam.ndim != 1 or lam.size % k != 0:
            raise InvalidRegion("lambda count must be a multiple of k")
        blocks = lam.size // k
        n_min = int(n_min)
        n_max = n_min + blocks - 1
        n = np.repeat(np.arange(n_min, n_max + 1, dtype=np.int64), k)
        j = np.arange(k * n_min + 1, k * (n_max + 1) + 1, dtype=np.int64)
        return cls(k=k, j=j, n=n, lam=lam, delta=lam - j / k,
                   n_min=n_min, n_max=n_max)


def generate_lambda_star(params: CutProjectParams, region, n_range) -> BlockEnumeration:
    """Enumerate the 1-dimensional dual set over blocks |n| <= n_range.

    For each n the slice S_n = S n (n*alpha + Z^d) is found by membership
    tests over the bounding box; the block values are n + <x, beta>.  Raises
    BlockCardinalityViolation when a block does not hold exactly k points
    (or touches a boundary), which signals a missed generic translation or a
    region that does not k-tile.
    """
    d = params.d
    k = params.k
    lo, hi = region.bbox
    widths = np.ceil(hi - lo).astype(int) + 3
    offs_axes = [np.arange(w) for w in widths]
    grids = np.meshgrid(*offs_axes, indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    ns = np.arange(-int(n_range), int(n_range) + 1, dtype=np.int64)
    lam_blocks = np.empty((ns.size, k))
    chunk = 4096
    for start in range(0, ns.size, chunk):
        nb = ns[start:start + chunk]
        na = nb[:, None].astype(float) * params.alpha[None, :]
        base = np.floor(lo[None, :] - na).astype(np.int64) - 1
        m = base[:, None, :] + offs[None, :, :]
        x = na[:, None, :] + m.astype(float)
        counts, bnd = region.membership_counts(x.reshape(-1, d))
        counts = counts.reshape(nb.size, -1)
        bnd = bnd.reshape(nb.size, -1)
        row_bnd = bnd.any(axis=1)
        if row_bnd.any():
            i = int(np.argmax(row_bnd))
            raise BlockCardinalityViolation(
                f"block n={int(nb[i])} touches a region boundary; "
                "apply a generic translation first",
                n=int(nb[i]),
            )
        row_counts = counts.sum(axis=1)
        bad = row_counts != k
        if bad.any():
            i = int(np.argmax(bad))
            raise BlockCardinalityViolation(
                f"block n={int(nb[i])} holds {int(row_counts[i])} points, expected {k}",
                n=int(nb[i]),
                found=int(row_counts[i]),
            )
        vals = np.einsum("cpd,d->cp", x, params.beta) + nb[:, None].astype(float)
        for row in range(nb.size):
            mask = counts[row] > 0
            v = np.repeat(vals[row][mask], counts[row][mask])
            lam_blocks[start + row] = np.sort(v)

    lam = lam_blocks.ravel()
    n = np.repeat(ns, k)
    j = np.arange(k * ns[0] + 1, k * (ns[-1] + 1) + 1, dtype=np.int64)
    return BlockEnumeration(
        k=k, j=j, n=n, lam=lam, delta=lam - j / k,
        n_min=int(ns[0]), n_max=int(ns[-1]),
    )


def separation_gap(enum: BlockEnumeration) -> float:
    """Minimal gap between consecutive sorted lambda values."""
    if len(enum) < 2:
        raise EnumerationTooShort("need at least 2 entries for a gap")
    return float(np.diff(np.sort(enum.lam)).min())


def density_estimate(points: QuasicrystalPoints, window=None) -> float:
    """Point count divided by window volume."""
    if window is None:
        window = points.window
    lo = np.asarray(window[0], dtype=float)
    hi = np.asarray(window[1], dtype=float)
    vol = float(np.prod(hi - lo))
    if vol <= 0:
        raise WindowTooSmall("window volume must be positive")
    return len(points) / vol
