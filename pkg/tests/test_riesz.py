import numpy as np
import pytest

from quasibasis.errors import (
    DuplicateFrequency,
    EigensolverNotConverged,
    InvalidRegion,
    QuadratureNotConverged,
)
from quasibasis.geometry import BoxUnionRegion, IndicatorRegion, measure
from quasibasis.quasicrystal import CutProjectParams, generate_lambda, generate_lambda_star
from quasibasis.riesz import (
    centered_point_slice,
    duality_cross_check,
    frame_bounds,
    ft_region,
    gram_1d,
    gram_dd,
    integer_frequency_grid,
    riesz_trend,
)

UNIT = BoxUnionRegion([[[0.0], [1.0]]])
TWO_INTERVALS = BoxUnionRegion([[[0.0], [1.0]], [[2.0], [3.0]]])


def quad_ft(region, xi, n=200_000):
    """Oracle: per-axis midpoint sums; exact tensor quadrature by separability."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    total = 0.0 + 0.0j
    for box in region.boxes:
        val = 1.0 + 0.0j
        for i in range(region.dim):
            lo, hi = box[0, i], box[1, i]
            xs = lo + (hi - lo) * (np.arange(n) + 0.5) / n
            val *= np.sum(np.exp(-2j * np.pi * xi[i] * xs)) * (hi - lo) / n
        total += val
    return total


def test_ft_at_zero_is_measure():
    assert ft_region(TWO_INTERVALS, [0.0]) == pytest.approx(2.0)
    sq = BoxUnionRegion([[[0.0, 0.0], [1.0, 2.0]]])
    assert ft_region(sq, [0.0, 0.0]) == pytest.approx(2.0)


def test_ft_unit_interval_integer_frequencies():
    for n in (1, -1, 2, 5, -17):
        assert abs(ft_region(UNIT, [float(n)])) <= 1e-13


def test_ft_union_against_quadrature():
    got = ft_region(TWO_INTERVALS, [0.5])
    assert abs(got - quad_ft(TWO_INTERVALS, [0.5])) <= 1e-8


def test_ft_matches_quadrature_seeded():
    rng = np.random.default_rng(41)
    region = BoxUnionRegion([
        [[0.1, -0.4], [1.1, 0.6]],
        [[2.0, 1.0], [2.5, 2.5]],
    ])
    for _ in range(50):
        xi = rng.uniform(-3.0, 3.0, size=2)
        got = ft_region(region, xi)
        assert abs(got - quad_ft(region, xi, n=20_000)) <= 1e-6


def test_ft_indicator_path_1d():
    def member(pts):
        return np.all((pts >= 0.0) & (pts < 1.0), axis=1).astype(int)

    region = IndicatorRegion(member, ([-0.25], [1.25]), vectorized=True)
    xi = np.array([0.37])
    exact = ft_region(UNIT, xi)
    assert abs(ft_region(region, xi) - exact) <= 1e-4


def test_ft_indicator_not_converged():
    def member(pts):
        # oscillation finer than any refinement level the solver reaches
        return ((pts[:, 0] * 93711.77) % 1.0 < 0.5).astype(int)

    region = IndicatorRegion(member, ([0.0], [1.0]), vectorized=True)
    with pytest.raises(QuadratureNotConverged):
        ft_region(region, np.array([0.3]))


def test_gram_dd_fuglede_identity():
    for d in (1, 2):
        cube = BoxUnionRegion([[[0.0] * d, [1.0] * d]])
        freqs = integer_frequency_grid(d, 40)
        g = gram_dd(freqs, cube)
        off = g.entries.copy()
        np.fill_diagonal(off, 0.0)
        assert np.abs(off).max() <= 1e-10
        assert np.allclose(np.diag(g.entries), 1.0, atol=1e-12)


def test_gram_dd_single_frequency():
    g = gram_dd(np.array([[0.25]]), TWO_INTERVALS)
    assert g.entries.shape == (1, 1)
    assert g.entries[0, 0] == pytest.approx(measure(TWO_INTERVALS))


def test_gram_dd_vanishing_difference_gives_diagonal():
    # ft of the union vanishes at xi = 1/4: located by a scan, then used exactly
    xs = np.linspace(0.2, 0.3, 2001)
    vals = np.abs(ft_region(TWO_INTERVALS, xs[:, None]))
    root = xs[np.argmin(vals)]
    assert root == pytest.approx(0.25, abs=1e-3)
    g = gram_dd(np.array([[0.0], [0.25]]), TWO_INTERVALS)
    assert abs(g.entries[0, 1]) <= 1e-12
    assert np.allclose(np.diag(g.entries), 2.0)


def test_gram_dd_hermitian_and_diagonal():
    rng = np.random.default_rng(8)
    freqs = rng.uniform(-2, 2, size=(24, 2))
    region = BoxUnionRegion([[[0.0, 0.0], [1.0, 1.0]], [[2.0, 0.5], [3.0, 1.5]]])
    g = gram_dd(freqs, region)
    assert np.abs(g.entries - g.entries.conj().T).max() <= 1e-12
    assert np.allclose(np.diag(g.entries), measure(region), atol=1e-12)


def test_gram_1d_orthogonal_grid():
    k = 3
    freqs = np.arange(-8, 9) / k
    g = gram_1d(freqs, k)
    assert np.allclose(g.entries, k * np.eye(freqs.size), atol=1e-12)


def test_gram_1d_half_step_value():
    for k in (1, 2, 4):
        g = gram_1d(np.array([0.0, 1.0 / (2 * k)]), k)
        assert abs(g.entries[0, 1]) == pytest.approx(2 * k / np.pi, rel=1e-12)
        # quadrature oracle for the same inner product
        xs = (np.arange(400_000) + 0.5) / 400_000 * k
        quad = np.sum(np.exp(2j * np.pi * (1.0 / (2 * k)) * xs)) * k / 400_000
        assert abs(g.entries[0, 1] - quad) <= 1e-8


def test_gram_1d_duplicate_rejected_unless_allowed():
    with pytest.raises(DuplicateFrequency):
        gram_1d(np.array([0.0, 0.5, 0.5]), 1)
    g = gram_1d(np.array([0.0, 0.5, 0.5]), 1, allow_duplicates=True)
    assert g.entries[1, 2] == pytest.approx(1.0)


def test_frame_bounds_identity_and_2x2():
    g = gram_dd(integer_frequency_grid(1, 16), UNIT)
    rep = frame_bounds(g)
    assert rep.lambda_min == pytest.approx(1.0, abs=1e-10)
    assert rep.lambda_max == pytest.approx(1.0, abs=1e-10)
    assert rep.condition_number == pytest.approx(1.0, abs=1e-10)

    k, gval = 2.0, 0.3 - 0.4j
    from quasibasis.riesz import GramMatrix
    H = np.array([[k, gval], [np.conj(gval), k]])
    rep2 = frame_bounds(GramMatrix(2, H, np.array([0.0, 1.0]), k, "interval"))
    assert rep2.lambda_min == pytest.approx(k - abs(gval), rel=1e-12)
    assert rep2.lambda_max == pytest.approx(k + abs(gval), rel=1e-12)


def test_frame_bounds_duplicate_rank_collapse():
    lam = np.arange(16.0)
    lam[7] = lam[6]
    g = gram_1d(lam, 1, allow_duplicates=True)
    rep = frame_bounds(g)
    assert rep.lambda_min <= 1e-8
    assert rep.condition_number == float("inf")


def test_frame_bounds_iterative_path_matches_dense():
    rng = np.random.default_rng(3)
    lam = np.sort(rng.uniform(-300, 300, size=600))
    lam += 0.51 * np.arange(600) / 600  # keep entries distinct
    g = gram_1d(np.unique(lam), 1)
    n = g.order
    assert n > 512
    rep = frame_bounds(g)
    dense = np.linalg.eigvalsh(g.entries)
    assert rep.lambda_max == pytest.approx(dense[-1], rel=1e-6)
    assert rep.lambda_min == pytest.approx(max(dense[0], 0.0), abs=1e-6 * dense[-1])


def test_frame_bounds_eigensolver_failure(monkeypatch):
    import scipy.sparse.linalg as spla

    def boom(*a, **kw):
        raise spla.ArpackNoConvergence("no convergence", [], [])

    monkeypatch.setattr("quasibasis.riesz.spla.eigsh", boom)
    lam = np.arange(600.0)
    g = gram_1d(lam, 1)
    with pytest.raises(EigensolverNotConverged):
        frame_bounds(g)


def test_spectrum_translation_invariance():
    rng = np.random.default_rng(19)
    freqs = rng.uniform(-2, 2, size=(20, 1))
    g0 = gram_dd(freqs, TWO_INTERVALS)
    g1 = gram_dd(freqs, TWO_INTERVALS.translate([0.7]))
    w0 = np.linalg.eigvalsh(g0.entries)
    w1 = np.linalg.eigvalsh(g1.entries)
    assert np.allclose(w0, w1, atol=1e-9)


def test_interlacing_under_deletion():
    rng = np.random.default_rng(29)
    lam = np.sort(rng.uniform(0, 32, size=64))
    g = gram_1d(lam, 2)
    w = np.linalg.eigvalsh(g.entries)
    for drop in (0, 13, 63):
        sub = np.delete(lam, drop)
        ws = np.linalg.eigvalsh(gram_1d(sub, 2).entries)
        assert ws[0] >= w[0] - 1e-12
        assert ws[-1] <= w[-1] + 1e-12


def test_riesz_trend_requires_context():
    with pytest.raises(InvalidRegion):
        riesz_trend(np.zeros((4, 2)), [2, 4])
    with pytest.raises(InvalidRegion):
        riesz_trend(np.zeros(4), [2, 4])
    with pytest.raises(InvalidRegion):
        riesz_trend(np.arange(8.0), [4, 2], k=1)


def test_riesz_trend_thread_cap_invariance(monkeypatch, demo_system):
    sys_ = demo_system("two-intervals")
    lam = sys_.enumeration.centered_slice(600)
    r1 = riesz_trend(lam, [32, 64, 128], k=2)
    monkeypatch.setenv("QUASIBASIS_THREADS", "4")
    r4 = riesz_trend(lam, [32, 64, 128], k=2)
    for a, b in zip(r1.reports, r4.reports):
        assert a.lambda_min == b.lambda_min
        assert a.lambda_max == b.lambda_max


def test_centered_point_slice_deterministic_ties():
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [-1.0, 0.0]])
    s = centered_point_slice(pts, 3)
    assert np.allclose(s[0], [0.0, 0.0])
    assert s.shape == (3, 2)


def test_duality_cross_check_cube_near_orthogonal(demo_system):
    sys_ = demo_system("cube")
    rep = duality_cross_check(sys_.enumeration, sys_.points,
                              sys_.region_translated, 128)
    assert rep.both_stable
    assert rep.one_d.condition_number < 1.2
    assert rep.d_dim.condition_number < 1.2


def test_duality_cross_check_two_intervals_pinned(demo_system):
    sys_ = demo_system("two-intervals")
    rep = duality_cross_check(sys_.enumeration, sys_.points,
                              sys_.region_translated, 256)
    assert rep.both_stable
    # pinned regression values from the seed-7 scenario
    assert rep.one_d.condition_number == pytest.approx(3.8133, rel=1e-3)
    assert rep.d_dim.condition_number == pytest.approx(3.8196, rel=1e-3)


def test_duality_degenerate_beta_collapses_one_side():
    # beta = 0 bypasses validation: the 1-d side duplicates every block value
    p = CutProjectParams(d=1, k=2, alpha=np.array([np.sqrt(2) % 1.0]),
                         beta=np.array([0.0]))
    region = TWO_INTERVALS.translate([0.283745])
    enum = generate_lambda_star(p, region, 300)
    pts = generate_lambda(p, ([-80.0], [80.0]))
    rep = duality_cross_check(enum, pts, region, 64, allow_duplicates=True)
    assert not rep.both_stable
    assert rep.one_d.lambda_min <= 1e-8
    assert "1-d" in rep.note
