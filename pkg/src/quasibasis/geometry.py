"""Regions, lattices, and lattice multi-tiling verification on R^d.

The certified path works on disjoint unions of half-open axis-aligned boxes
[lo, hi): measure, translate-multiplicity counting and Fourier transforms are
all exact there.  General sets go through IndicatorRegion, whose membership
oracle returns an integer local multiplicity (0 outside, >= 1 inside, -1 when
the query is too close to the boundary to classify), so overlapping translates
of a tile can be modelled as a multiset.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryHit,
    InvalidRegion,
    SingularLattice,
    TranslationFailed,
)

# Boundary tolerance: well below any desk-scale geometric feature, well above
# double-precision noise.  Points this close to a box face are unclassifiable.
TAU_BOUNDARY = 1e-9


def as_vector(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise InvalidRegion(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidRegion("vector entries must be finite")
    if dim is not None and v.shape[0] != dim:
        raise InvalidRegion(f"expected dimension {dim}, got {v.shape[0]}")
    return v


class Lattice:
    """Full-rank lattice A * Z^d given by the columns of A."""

    def __init__(self, basis):
        A = np.asarray(basis, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise SingularLattice(f"lattice basis must be square, got {A.shape}")
        det = np.linalg.det(A)
        scale = max(1.0, float(np.abs(A).max())) ** A.shape[0]
        if not np.isfinite(det) or abs(det) <= 1e-12 * scale:
            raise SingularLattice(f"lattice basis is singular (det={det})")
        self.basis = A
        self.dual_basis = np.linalg.inv(A).T
        if not np.allclose(self.basis @ self.dual_basis.T, np.eye(A.shape[0]), atol=1e-12):
            raise SingularLattice("basis * dual_basis^T deviates from identity")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.basis))

    def dual(self) -> "Lattice":
        return Lattice(self.dual_basis)

    @classmethod
    def integer(cls, dim: int) -> "Lattice":
        return cls(np.eye(dim))


class BoxUnionRegion:
    """Finite disjoint union of half-open boxes [lo, hi)."""

    def __init__(self, boxes, translation_offset=None):
        arr = np.asarray(boxes, dtype=float)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3 or arr.shape[1] != 2:
            raise InvalidRegion(f"boxes must have shape (nb, 2, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidRegion("box coordinates must be finite")
        if not np.all(arr[:, 0, :] < arr[:, 1, :]):
            raise InvalidRegion("each box needs lo < hi componentwise")
        nb = arr.shape[0]
        for i in range(nb):
            for j in range(i + 1, nb):
                lo = np.maximum(arr[i, 0], arr[j, 0])
                hi = np.minimum(arr[i, 1], arr[j, 1])
                if np.all(lo < hi):
                    raise InvalidRegion(
                        f"boxes {i} and {j} overlap; model overlapping translates "
                        "as separate scenario pieces"
                    )
        self.boxes = arr
        d = arr.shape[2]
        if translation_offset is None:
            self.translation_offset = np.zeros(d)
        else:
            self.translation_offset = as_vector(translation_offset, d)

    @property
    def dim(self) -> int:
        return self.boxes.shape[2]

    @property
    def bbox(self):
        return self.boxes[:, 0, :].min(axis=0), self.boxes[:, 1, :].max(axis=0)

    def translate(self, t) -> "BoxUnionRegion":
        t = as_vector(t, self.dim)
        return BoxUnionRegion(self.boxes + t[None, None, :],
                              translation_offset=self.translation_offset + t)

    def corners(self):
        for box in self.boxes:
            for pick in itertools.product(*[(box[0, i], box[1, i]) for i in range(self.dim)]):
                yield np.array(pick)

    def membership_counts(self, pts):
        """Counts and boundary flags for a batch of points, shape (B, d).

        boundary is conservative: any point within TAU_BOUNDARY of any box
        face plane (while inside that box's tau-neighborhood) is flagged.
        """
        pts = np.asarray(pts, dtype=float)
        counts = np.zeros(pts.shape[0], dtype=np.int64)
        boundary = np.zeros(pts.shape[0], dtype=bool)
        for box in self.boxes:
            lo, hi = box[0], box[1]
            inside = np.all((pts >= lo) & (pts < hi), axis=1)
            near = np.all((pts > lo - TAU_BOUNDARY) & (pts < hi + TAU_BOUNDARY), axis=1)
            face = np.any(
                (np.abs(pts - lo) <= TAU_BOUNDARY) | (np.abs(pts - hi) <= TAU_BOUNDARY),
                axis=1,
            )
            counts += inside
            boundary |= near & face
        return counts, boundary


class IndicatorRegion:
    """Region given by a membership oracle plus a bounding box.

    membership(x) -> int: 0 outside, c >= 1 inside with local multiplicity c,
    -1 boundary-uncertain.  Everything outside bbox is outside.  When
    ``vectorized`` is set the oracle receives an (B, d) array and must return
    an integer array of length B.
    """

    def __init__(self, membership, bbox, declared_measure=None, vectorized=False):
        lo, hi = bbox
        self.bbox_lo = as_vector(lo)
        self.bbox_hi = as_vector(hi, self.bbox_lo.shape[0])
        if not np.all(self.bbox_lo < self.bbox_hi):
            raise InvalidRegion("bounding box needs lo < hi componentwise")
        self.membership = membership
        self.declared_measure = declared_measure
        self.vectorized = vectorized

    @property
    def dim(self) -> int:
        return self.bbox_lo.shape[0]

    @property
    def bbox(self):
        return self.bbox_lo, self.bbox_hi

    def membership_counts(self, pts):
        pts = np.asarray(pts, dtype=float)
        counts = np.zeros(pts.shape[0], dtype=np.int64)
        inbox = np.all(
            (pts > self.bbox_lo - TAU_BOUNDARY) & (pts < self.bbox_hi + TAU_BOUNDARY),
            axis=1,
        )
        if np.any(inbox):
            sub = pts[inbox]
            if self.vectorized:
                vals = np.asarray(self.membership(sub), dtype=np.int64)
            else:
                vals = np.fromiter((int(self.membership(p)) for p in sub),
                                   dtype=np.int64, count=sub.shape[0])
            counts[inbox] = vals
        boundary = counts < 0
        return np.maximum(counts, 0), boundary


def measure(region) -> float:
    """Exact measure of a box union (sum of box volumes)."""
    if isinstance(region, BoxUnionRegion):
        sides = region.boxes[:, 1, :] - region.boxes[:, 0, :]
        return float(np.sum(np.prod(sides, axis=1)))
    if isinstance(region, IndicatorRegion):
        if region.declared_measure is not None:
            return float(region.declared_measure)
        raise InvalidRegion("indicator region has no declared measure")
    raise InvalidRegion(f"unsupported region type {type(region)!r}")


def bounding_radius(region) -> float:
    """sup of ||x|| over the closure of the region."""
    if isinstance(region, BoxUnionRegion):
        return float(max(np.linalg.norm(c) for c in region.corners()))
    lo, hi = region.bbox
    best = 0.0
    for pick in itertools.product(*[(lo[i], hi[i]) for i in range(len(lo))]):
        best = max(best, float(np.linalg.norm(pick)))
    return best


def _offset_mesh(widths):
    axes = [np.arange(w) for w in widths]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def multiplicity_batch(region, lattice, pts, chunk=2048):
    """Sum of region indicators over lattice translates, for a point batch.

    Returns (counts, boundary) arrays of length B.  Candidate lattice points
    are enumerated per query point from the bounding-box hull, so widely
    spread batches stay cheap.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    d = region.dim
    A = lattice.basis
    Ainv = np.linalg.inv(A)
    lo, hi = region.bbox
    corners = np.array(list(itertools.product(*[(lo[i], hi[i]) for i in range(d)])))
    H = corners @ Ainv.T
    hmin, hmax = H.min(axis=0), H.max(axis=0)
    widths = np.ceil(hmax - hmin).astype(int) + 3
    offs = _offset_mesh(widths)

    counts = np.zeros(pts.shape[0], dtype=np.int64)
    boundary = np.zeros(pts.shape[0], dtype=bool)
    for start in range(0, pts.shape[0], chunk):
        X = pts[start:start + chunk]
        Y = X @ Ainv.T
        base = np.floor(Y - hmax).astype(np.int64) - 1
        m = base[:, None, :] + offs[None, :, :]
        lam = m.astype(float) @ A.T
        diffs = X[:, None, :] - lam
        c, b = region.membership_counts(diffs.reshape(-1, d))
        c = c.reshape(X.shape[0], -1)
        b = b.reshape(X.shape[0], -1)
        counts[start:start + chunk] = c.sum(axis=1)
        boundary[start:start + chunk] = b.any(axis=1)
    return counts, boundary


def multiplicity(region, lattice, x) -> int:
    """Number of lattice translates of the region covering x.

    Raises BoundaryHit when x is within TAU_BOUNDARY of a translate boundary,
    where the pointwise count is ill-defined.
    """
    x = as_vector(x, region.dim)
    counts, boundary = multiplicity_batch(region, lattice, x[None, :])
    if boundary[0]:
        raise BoundaryHit(f"point {x.tolist()} is within {TAU_BOUNDARY} of a boundary")
    return int(counts[0])


@dataclass
class TilingReport:
    """Outcome of sampled multi-tiling verification."""

    k_observed: object
    samples_tested: int
    failures: list
    boundary_hits: int
    failure_count: int
    expected_k: int

    MAX_STORED_FAILURES = 64

    @property
    def consistent(self) -> bool:
        return self.k_observed == self.expected_k and self.failure_count == 0

    def to_json_dict(self):
        return {
            "k_observed": self.k_observed,
            "expected_k": self.expected_k,
            "samples_tested": self.samples_tested,
            "failure_count": self.failure_count,
            "failures": [
                {"point": list(p), "multiplicity": int(m)} for p, m in self.failures
            ],
            "boundary_hits": self.boundary_hits,
        }


def verify_multitiling(region, lattice, expected_k, sample_count, seed) -> TilingReport:
    """Sample one fundamental domain and check the covering multiplicity.

    Sampling uses a seeded generic offset so lattice-boundary points have
    probability ~0; boundary hits are skipped and counted.  k_observed is set
    only when every non-boundary sample agrees.
    """
    if sample_count < 1:
        raise InvalidRegion("sample_count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    d = region.dim
    shift = rng.uniform(0.0, 1.0, size=d)
    u = rng.uniform(0.0, 1.0, size=(sample_count, d))
    pts = (u + shift) @ lattice.basis.T
    counts, boundary = multiplicity_batch(region, lattice, pts)
    good = ~boundary
    fail_mask = good & (counts != expected_k)
    fail_idx = np.nonzero(fail_mask)[0]
    failures = [
        (pts[i].tolist(), int(counts[i]))
        for i in fail_idx[: TilingReport.MAX_STORED_FAILURES]
    ]
    observed = np.unique(counts[good])
    if observed.size == 1:
        k_observed = int(observed[0])
    else:
        k_observed = "inconsistent"
    return TilingReport(
        k_observed=k_observed,
        samples_tested=int(sample_count),
        failures=failures,
        boundary_hits=int(boundary.sum()),
        failure_count=int(fail_idx.size),
        expected_k=int(expected_k),
    )


def normalize_to_integer_lattice(region, lattice):
    """Map the problem to the integer lattice: region' = A^{-1} region.

    Boxes are mapped exactly when A is diagonal; otherwise the result is an
    IndicatorRegion that composes the original membership with A.  Returns
    (region', pullback) where pullback = A^{-T} sends a frequency set that is
    Riesz for L^2(region') to one Riesz for L^2(region).
    """
    A = lattice.basis
    d = lattice.dim
    if region.dim != d:
        raise InvalidRegion("region and lattice dimensions disagree")
    pullback = lattice.dual_basis.copy()
    diag = np.diag(A)
    is_diagonal = np.count_nonzero(A - np.diag(diag)) == 0
    if is_diagonal and isinstance(region, BoxUnionRegion):
        scaled = region.boxes / diag[None, None, :]
        # negative diagonal entries flip the interval; half-open orientation
        # changes only on the measure-zero boundary
        lo = np.minimum(scaled[:, 0, :], scaled[:, 1, :])
        hi = np.maximum(scaled[:, 0, :], scaled[:, 1, :])
        boxes = np.stack([lo, hi], axis=1)
        offset = np.linalg.solve(A, region.translation_offset)
        return BoxUnionRegion(boxes, translation_offset=offset), pullback

    Ainv = np.linalg.inv(A)
    if isinstance(region, BoxUnionRegion):
        corner_list = np.array(list(region.corners()))
        declared = measure(region) / abs(np.linalg.det(A))
    else:
        lo, hi = region.bbox
        corner_list = np.array(
            list(itertools.product(*[(lo[i], hi[i]) for i in range(d)]))
        )
        declared = (
            region.declared_measure / abs(np.linalg.det(A))
            if region.declared_measure is not None
            else None
        )
    mapped = corner_list @ Ainv.T
    bbox = (mapped.min(axis=0) - 1e-12, mapped.max(axis=0) + 1e-12)

    def member(pts):
        c, b = region.membership_counts(np.asarray(pts) @ A.T)
        return np.where(b, -1, c)

    return IndicatorRegion(member, bbox, declared_measure=declared, vectorized=True), pullback


def generic_translate(region, alpha, r_range, seed, max_attempts=64, candidate_shifts=None):
    """Translate the region so every integer multiple of alpha is boundary-clear.

    Tries seeded random shifts until, for every r in [-r_range, r_range], the
    point r*alpha stays at least TAU_BOUNDARY away from every boundary of
    every integer translate of the shifted region.  Raises TranslationFailed
    (with the attempt log) when max_attempts shifts all fail, which signals a
    pathological or degenerate region.
    """
    alpha = as_vector(alpha, region.dim)
    lattice = Lattice.integer(region.dim)
    rs = np.arange(-int(r_range), int(r_range) + 1)
    pts = rs[:, None] * alpha[None, :]
    if candidate_shifts is not None:
        shifts = [as_vector(s, region.dim) for s in candidate_shifts]
    else:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
        shifts = [rng.uniform(0.0, 1.0, size=region.dim) for _ in range(max_attempts)]
    attempts = []
    for t in shifts[:max_attempts]:
        shifted = region.translate(t)
        _, boundary = multiplicity_batch(shifted, lattice, pts)
        hits = int(boundary.sum())
        if hits == 0:
            return shifted
        attempts.append({"shift": t.tolist(), "boundary_hits": hits})
    raise TranslationFailed(
        f"no generic translation found in {len(attempts)} attempts", attempts
    )
