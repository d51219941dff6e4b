import numpy as np
import pytest

from quasibasis.errors import (
    BlockCardinalityViolation,
    IndependenceHeuristicFailed,
    WindowTooSmall,
)
from quasibasis.geometry import BoxUnionRegion, generic_translate
from quasibasis.quasicrystal import (
    BlockEnumeration,
    CutProjectParams,
    default_params,
    density_estimate,
    gamma_generators,
    generate_lambda,
    generate_lambda_star,
    make_params,
    separation_gap,
)

SQRT2F = np.sqrt(2.0) % 1.0
SQRT3F = np.sqrt(3.0) % 1.0


def test_default_params_d1():
    p = default_params(1, 2, seed=7)
    assert p.alpha[0] == pytest.approx(np.sqrt(2) - 1.0)
    assert np.linalg.norm(p.beta) <= 0.25 + 1e-12
    assert p.k == 2


def test_default_params_d2_seed7():
    p = default_params(2, 1, seed=7)
    assert np.allclose(p.alpha, [SQRT2F, SQRT3F])
    assert np.linalg.norm(p.beta) <= 0.25 + 1e-12


def test_rational_alpha_rejected():
    with pytest.raises(IndependenceHeuristicFailed):
        make_params(2, 1, [0.5, SQRT3F], [0.1234567, 0.2234567])


def test_zero_beta_rejected():
    with pytest.raises(IndependenceHeuristicFailed):
        make_params(1, 1, [SQRT2F], [0.0])


def test_gamma_generators_hand_matrices():
    a, b = 0.37, 0.11
    p = CutProjectParams(d=1, k=1, alpha=np.array([a]), beta=np.array([b]))
    g = gamma_generators(p)
    assert np.allclose(g.gamma_basis, [[1 + b * a, -b], [-a, 1.0]], atol=1e-15)
    assert np.allclose(g.gamma_star_basis, [[1.0, a], [b, 1 + b * a]], atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gamma_duality_and_determinants(d):
    p = default_params(d, 2, seed=5)
    g = gamma_generators(p)
    rng = np.random.default_rng(17)
    for _ in range(20):
        u = rng.integers(-40, 41, size=d + 1).astype(float)
        v = rng.integers(-40, 41, size=d + 1).astype(float)
        dot = (g.gamma_basis @ u) @ (g.gamma_star_basis @ v)
        assert abs(dot - round(dot)) < 1e-9
        assert round(dot) == round(u @ v)
    assert abs(abs(np.linalg.det(g.gamma_basis)) - 1.0) < 1e-9
    assert abs(abs(np.linalg.det(g.gamma_star_basis)) - 1.0) < 1e-9
    # the dual basis is exactly the transpose inverse
    assert np.allclose(g.gamma_star_basis, np.linalg.inv(g.gamma_basis.T), atol=1e-12)


def brute_lambda_points(params, window, reach=30):
    """Oracle: scan the (m, n) grid directly against the strip condition."""
    lo, hi = window
    pts = []
    for m in range(-reach, reach + 1):
        for n in range(-reach, reach + 1):
            h = n - params.alpha[0] * m
            if 0.0 <= h < params.k:
                x = m - params.beta[0] * h
                if lo <= x < hi:
                    pts.append(x)
    return np.sort(np.array(pts))


def test_generate_lambda_matches_brute_force():
    p = default_params(1, 1, seed=3)
    q = generate_lambda(p, ([-10.0], [10.0]))
    oracle = brute_lambda_points(p, (-10.0, 10.0))
    assert len(q) == oracle.size
    assert np.allclose(np.sort(q.points[:, 0]), oracle, atol=1e-12)
    # exactly one admissible height per base point at k=1
    assert np.unique(q.preimage_m, axis=0).shape[0] == len(q)


def test_generate_lambda_strip_invariant():
    p = default_params(2, 3, seed=11)
    q = generate_lambda(p, ([-6.0, -6.0], [6.0, 6.0]))
    heights = q.preimage_n - q.preimage_m.astype(float) @ p.alpha
    assert np.all(heights >= 0.0) and np.all(heights < p.k)


def test_generate_lambda_density():
    p = default_params(1, 2, seed=2)
    q = generate_lambda(p, ([-50.0], [50.0]))
    assert density_estimate(q) == pytest.approx(2.0, rel=0.1)
    p3 = default_params(1, 3, seed=2)
    q3 = generate_lambda(p3, ([-50.0], [50.0]))
    assert density_estimate(q3) == pytest.approx(3.0, rel=0.1)


def test_generate_lambda_empty_window():
    p = default_params(1, 1, seed=3)
    with pytest.raises(WindowTooSmall):
        generate_lambda(p, ([0.0], [0.0]))


def test_density_zero_volume_window():
    p = default_params(1, 1, seed=3)
    q = generate_lambda(p, ([-5.0], [5.0]))
    with pytest.raises(WindowTooSmall):
        density_estimate(q, ([1.0], [1.0]))


def test_projection_injectivity_finite_window():
    p = default_params(1, 2, seed=13)
    q = generate_lambda(p, ([-20.0], [20.0]))
    xs = np.sort(q.points[:, 0])
    assert np.min(np.diff(xs)) > 1e-12
    heights = q.preimage_n - q.preimage_m.astype(float) @ p.alpha
    hs = np.sort(heights)
    assert np.min(np.diff(hs)) > 1e-12


def test_beta_zero_degenerate_collapses():
    # bypasses validation on purpose: beta = 0 stacks k points per base point
    p = CutProjectParams(d=1, k=2, alpha=np.array([SQRT2F]), beta=np.array([0.0]))
    q = generate_lambda(p, ([-5.0], [5.0]))
    assert q.deduplicated > 0
    assert np.allclose(q.points, np.round(q.points))


def brute_block(region, alpha, beta, n, reach=20):
    vals = []
    for m in range(-reach, reach + 1):
        x = n * alpha + m
        for box in region.boxes:
            if box[0, 0] <= x < box[1, 0]:
                vals.append(n + beta * x)
    return np.sort(np.array(vals))


def test_generate_lambda_star_single_interval():
    p = default_params(1, 1, seed=7)
    region = generic_translate(BoxUnionRegion([[[0.0], [1.0]]]), p.alpha, 200, seed=7)
    enum = generate_lambda_star(p, region, 200)
    assert len(enum) == 401
    for n in (-200, -57, 0, 123, 200):
        oracle = brute_block(region, p.alpha[0], p.beta[0], n, reach=205)
        got = enum.lam[enum.n == n]
        assert oracle.size == 1
        assert np.allclose(np.sort(got), oracle, atol=1e-12)


def test_generate_lambda_star_two_intervals_blocks():
    p = default_params(1, 2, seed=7)
    region = generic_translate(
        BoxUnionRegion([[[0.0], [1.0]], [[2.0], [3.0]]]), p.alpha, 500, seed=7
    )
    enum = generate_lambda_star(p, region, 500)
    counts = np.bincount(enum.n - enum.n_min)
    assert np.all(counts == 2)
    # block n occupies exactly indices k*n+1 .. k*(n+1)
    assert np.array_equal(enum.j, np.arange(2 * -500 + 1, 2 * 501 + 1))
    assert np.allclose(enum.delta, enum.lam - enum.j / 2.0)
    for n in (-500, -3, 0, 11, 499):
        oracle = brute_block(region, p.alpha[0], p.beta[0], n, reach=510)
        assert np.allclose(np.sort(enum.lam[enum.n == n]), oracle, atol=1e-10)


def test_generate_lambda_star_untranslated_boundary():
    # r = 0 puts the orbit point exactly on the boundary of [0, 1)
    p = default_params(1, 1, seed=7)
    region = BoxUnionRegion([[[0.0], [1.0]]])
    with pytest.raises(BlockCardinalityViolation) as err:
        generate_lambda_star(p, region, 50)
    assert err.value.n == 0


def test_generate_lambda_star_non_tiling_region():
    p = default_params(1, 2, seed=7)
    region = generic_translate(BoxUnionRegion([[[0.0], [1.0]]]), p.alpha, 50, seed=7)
    with pytest.raises(BlockCardinalityViolation):
        generate_lambda_star(p, region, 50)  # 1-tile cannot fill k=2 blocks


def test_separation_gap_cases():
    ints = BlockEnumeration.from_lambdas(np.arange(-10.0, 11.0), k=1, n_min=-11)
    assert separation_gap(ints) == pytest.approx(1.0)
    dup = BlockEnumeration.from_lambdas(np.array([0.0, 1.0, 1.0, 2.0]), k=1, n_min=0)
    assert separation_gap(dup) == 0.0


def test_centered_slice_is_contiguous():
    enum = BlockEnumeration.from_lambdas(np.arange(-10.0, 10.0) / 2.0, k=2, n_min=-5)
    s = enum.centered_slice(6)
    assert s.shape == (6,)
    full = enum.lam
    pos = np.searchsorted(full, s[0])
    assert np.allclose(full[pos:pos + 6], s)
