from __future__ import annotations

import numpy as np
import pytest

from conftest import mixed_mode, random_gridfunction
from pxwell.energy import (
    estimate_depth,
    estimate_level_radii,
    depth_lower_formula,
    find_lambda_star,
    ray_profile,
    snapshot,
)
from pxwell.exponents import build_field
from pxwell.grid import Grid, GridFunction, cell_gradient_magnitude, project_mean_zero
from pxwell.norms import EmbeddingEstimate, estimate_embedding, estimate_gn_constant


@pytest.fixture(scope="module")
def pw():
    g = Grid((20, 20), (1.0, 1.0))
    return g, build_field("affine:1.8+0.1x+0.1y", g), build_field(4.0, g)


def test_snapshot_zero(pw):
    g, p, r = pw
    s = snapshot(GridFunction(g, np.zeros(g.shape)), p, r)
    assert s.J == 0.0 and s.I == 0.0 and s.l2sq == 0.0
    assert np.isnan(s.delta0)


def test_snapshot_direct_summation_oracle():
    g = Grid((16,), (1.0,))
    rng = np.random.default_rng(0)
    u = project_mean_zero(random_gridfunction(g, rng))
    p2, r4 = build_field(2.0, g), build_field(4.0, g)
    s = snapshot(u, p2, r4)
    h = g.spacing[0]
    gm = cell_gradient_magnitude(u)
    J_direct = h * (0.5 * np.sum(gm**2) - 0.25 * np.sum(u.values**4))
    I_direct = h * (np.sum(gm**2) - np.sum(u.values**4))
    assert s.J == pytest.approx(J_direct, rel=1e-13)
    assert s.I == pytest.approx(I_direct, rel=1e-13)
    assert s.delta0 == pytest.approx(s.source_modular / s.grad_modular)


def test_ray_profile_constant_exponents_power_law(pw):
    g, _, r = pw
    p2 = build_field(2.0, g)
    u = mixed_mode(g)
    s = snapshot(u, p2, r)
    a, b = s.grad_modular, s.source_modular
    for lam, I, J in ray_profile(u, p2, r, [0.0, 0.3, 1.0, 2.2]):
        assert I == pytest.approx(lam**2 * a - lam**4 * b, rel=1e-12, abs=1e-14)
        assert J == pytest.approx(lam**2 * a / 2 - lam**4 * b / 4, rel=1e-12, abs=1e-14)


def test_ray_profile_variable_p_lower_bound(pw):
    # I(lam u) >= lam^{p_plus} a - lam^{r_minus} b for lam < 1
    g, p, r = pw
    u = mixed_mode(g)
    s = snapshot(u, p, r)
    a, b = s.grad_modular, s.source_modular
    for lam, I, _ in ray_profile(u, p, r, [0.1, 0.4, 0.7, 0.95]):
        assert I >= lam**p.p_plus * a - lam**r.p_minus * b - 1e-12


def test_lambda_star_analytic_roots():
    g = Grid((24, 24), (1.0, 1.0))
    p2, r4 = build_field(2.0, g), build_field(4.0, g)
    u = mixed_mode(g)
    s = snapshot(u, p2, r4)
    a, b = s.grad_modular, s.source_modular
    lam = find_lambda_star(u, p2, r4)
    assert lam == pytest.approx(np.sqrt(a / b), rel=1e-9)
    # rescale so a = b: root at 1
    c = np.sqrt(a / b)
    balanced = GridFunction(g, c * u.values)
    assert find_lambda_star(balanced, p2, r4) == pytest.approx(1.0, rel=1e-9)
    # a Nehari point maps to itself
    on_manifold = GridFunction(g, lam * u.values)
    assert find_lambda_star(on_manifold, p2, r4) == pytest.approx(1.0, rel=1e-8)


def test_lambda_star_preconditions(pw):
    g, p, r = pw
    with pytest.raises(ValueError, match="degenerate"):
        find_lambda_star(GridFunction(g, np.zeros(g.shape)), p, r)
    with pytest.raises(ValueError, match="r_minus > p_plus"):
        find_lambda_star(mixed_mode(g), p, build_field(1.5, g))


def test_depth_lower_formula_at_unit_B():
    g = Grid((8,), (1.0,))
    p2, r4 = build_field(2.0, g), build_field(4.0, g)
    assert depth_lower_formula(p2, r4, 1.0) == pytest.approx(0.25)


def test_depth_estimate_positive_and_monotone(pw):
    g, p, r = pw
    B = estimate_embedding(g, p, r, trials=4, seed=1, ascent_steps=0)
    d1 = estimate_depth(g, p, r, trials=2, seed=3, B_est=B, descent_steps=4)
    d2 = estimate_depth(g, p, r, trials=4, seed=3, B_est=B, descent_steps=4)
    assert d1.upper > 0 and d2.upper > 0
    assert d2.upper <= d1.upper  # min over a superset of candidates
    assert d1.lower_formula == pytest.approx(depth_lower_formula(p, r, B.constant))
    assert d1.B_used == B.ident


def test_nehari_energy_identity(pw):
    # on the manifold J >= (r_minus - p_plus)/(p_plus r_minus) * grad modular
    g, p, r = pw
    rng = np.random.default_rng(8)
    coeff = (r.p_minus - p.p_plus) / (p.p_plus * r.p_minus)
    for _ in range(6):
        w = random_gridfunction(g, rng)
        w = project_mean_zero(w)
        lam = find_lambda_star(w, p, r)
        s = snapshot(GridFunction(g, lam * w.values), p, r)
        assert s.J >= coeff * s.grad_modular - 1e-8 * (1 + abs(s.J))


def test_bounded_slice_identity(pw):
    # every sampled point of {J <= s, I > 0} has grad modular < s p+ r-/(r- - p+)
    from pxwell.witnesses import random_field

    g, p, r = pw
    rng = np.random.default_rng(9)
    s_level = 60.0
    bound = s_level * p.p_plus * r.p_minus / (r.p_minus - p.p_plus)
    found = 0
    for _ in range(40):
        w = random_field(g, rng, amp_range=(0.05, 2.0))
        snap = snapshot(w, p, r)
        if snap.I > 0 and snap.J <= s_level:
            found += 1
            assert snap.grad_modular < bound
    assert found > 5


def test_level_radii(pw):
    g, p, r = pw
    B = estimate_embedding(g, p, r, trials=4, seed=1, ascent_steps=0)
    dep = estimate_depth(g, p, r, trials=4, seed=0, B_est=B, descent_steps=6)
    s1 = 3.0 * dep.upper
    s2 = 9.0 * dep.upper
    r1 = estimate_level_radii(g, s1, p, r, samples=24, seed=5, depth_upper=dep.upper)
    r2 = estimate_level_radii(g, s2, p, r, samples=24, seed=5, depth_upper=dep.upper)
    assert 0 < r1.lambda_s <= r1.Lambda_s
    # nested samples: weaker level keeps a superset
    assert r2.lambda_s <= r1.lambda_s
    assert r2.Lambda_s >= r1.Lambda_s
    with pytest.raises(ValueError, match="exceed"):
        estimate_level_radii(g, 0.5 * dep.upper, p, r, samples=4, seed=5, depth_upper=dep.upper)


def test_level_radii_floor_when_defined():
    # window 2 <= r_plus <= (1 + 2/N) p_minus with r_minus > p_plus
    g = Grid((16, 16), (1.0, 1.0))
    p = build_field(1.9, g)
    r = build_field(3.0, g)
    ct = estimate_gn_constant(g, p, r, trials=6, seed=2)
    B = estimate_embedding(g, p, r, trials=4, seed=1, ascent_steps=0)
    dep = estimate_depth(g, p, r, trials=4, seed=0, B_est=B, descent_steps=6)
    radii = estimate_level_radii(g, 4.0 * dep.upper, p, r, samples=24, seed=5,
                                 depth_upper=dep.upper, ctilde=ct)
    assert radii.M_bound is not None and radii.M_bound > 0
    assert radii.lambda_s >= radii.M_bound


def test_depth_upper_vs_single_mode(pw):
    # descent should do no worse than the best raw candidate
    g, p, r = pw
    u = mixed_mode(g)
    lam = find_lambda_star(u, p, r)
    J_mode = snapshot(GridFunction(g, lam * u.values), p, r).J
    dep = estimate_depth(g, p, r, trials=4, seed=0, descent_steps=8)
    assert dep.upper <= J_mode + 1e-9
