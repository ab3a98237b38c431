from __future__ import annotations

import numpy as np
import pytest

from pxwell.exponents import build_field, check_hypotheses, check_log_holder
from pxwell.grid import Grid


def test_constant_field():
    g = Grid((5, 7), (1.0, 1.0))
    f = build_field(2.0, g)
    assert f.p_minus == f.p_plus == 2.0


def test_affine_extrema_at_corners():
    g = Grid((4, 4), (1.0, 1.0))
    f = build_field("affine:1.8+0.35x+0.35y", g)
    x, y = g.centers()
    direct = 1.8 + 0.35 * x + 0.35 * y
    assert np.array_equal(f.values, direct)
    assert f.p_minus == direct[0, 0]
    assert f.p_plus == direct[-1, -1]


def test_sin_spec():
    g = Grid((32,), (1.0,))
    f = build_field("sin:2.0+0.3*sin(2pix)", g)
    x = g.axis_centers(0)
    assert np.allclose(f.values, 2.0 + 0.3 * np.sin(2 * np.pi * x))


def test_rejects_inadmissible():
    g = Grid((4,), (1.0,))
    with pytest.raises(ValueError, match="exceed 1"):
        build_field(1.0, g)
    with pytest.raises(ValueError, match="cell"):
        build_field("affine:1.05+-0.5x", g)  # dips below 1 on the right
    with pytest.raises(ValueError):
        build_field("garbage:2", g)


def test_tabulated_field():
    g = Grid((3, 2), (1.0, 1.0))
    vals = np.array([[1.5, 2.0], [2.5, 3.0], [3.5, 4.0]])
    f = build_field(vals, g, label="r")
    assert f.p_minus == 1.5 and f.p_plus == 4.0 and f.label == "r"


def test_log_holder_constant_zero():
    g = Grid((16,), (1.0,))
    rep = check_log_holder(build_field(2.0, g))
    assert rep.max_log_modulus == 0.0 and rep.passes


def test_log_holder_lipschitz_bounded():
    # |q(x)-q(y)| = |x-y| so the modulus is s ln(1/s) <= 1/e
    g = Grid((48,), (1.0,))
    rep = check_log_holder(build_field("affine:2.0+1.0x", g))
    assert rep.passes
    assert rep.max_log_modulus <= 1.0 / np.e + 1e-12
    assert rep.pairs_checked > 0


def test_log_holder_jump_fails_on_fine_grids():
    def steep(x):
        return 2.5 + 1.2 * np.tanh((x - 0.5) / 1e-4)

    coarse = check_log_holder(build_field(steep, Grid((16,), (1.0,))))
    fine_grid = Grid((512,), (1.0,))
    fine = check_log_holder(build_field(steep, fine_grid))
    # adjacent cells straddle the jump: modulus ~ 2.4 ln(n)
    h = fine_grid.spacing[0]
    q = build_field(steep, fine_grid).values
    jumps = np.abs(np.diff(q)) * np.log(1.0 / h)
    assert fine.max_log_modulus >= jumps.max() - 1e-12
    assert not fine.passes
    assert coarse.max_log_modulus < fine.max_log_modulus


def test_log_holder_refinement_monotone():
    # nested cell centers under factor-3 refinement, exhaustive pairs
    def q(x):
        return 2.0 + 0.8 * np.sin(3 * np.pi * x)

    vals = []
    for n in (6, 18, 54):
        rep = check_log_holder(build_field(q, Grid((n,), (1.0,))), pair_budget=10**6)
        vals.append(rep.max_log_modulus)
    assert vals[0] <= vals[1] <= vals[2]


def test_hypotheses_examples():
    g = Grid((8, 8), (1.0, 1.0))
    p = build_field(lambda x, y: 1.8 + 0.1 * (x + y) / 2, g)
    r = build_field(4.0, g)
    rep = check_hypotheses(p, r, N=2)
    assert rep.condition_H
    assert not rep.r_plus_below_p_minus
    assert rep.critical_sobolev == pytest.approx(2 * p.p_minus / (2 - p.p_minus))

    rep2 = check_hypotheses(build_field(2.5, g), build_field(1.5, g), N=2)
    assert not rep2.condition_H
    assert rep2.r_plus_below_p_minus
    assert rep2.thm54_regime

    g1 = Grid((8,), (1.0,))
    rep3 = check_hypotheses(build_field(1.5, g1), build_field(4.0, g1), N=1)
    assert not rep3.condition_H  # p_minus < N impossible with p > 1, N = 1


def test_hypotheses_monotone_in_r():
    g = Grid((8,), (1.0,))
    p = build_field(2.5, g)
    rng = np.random.default_rng(0)
    for _ in range(20):
        base = 1.1 + rng.uniform(0, 2)
        bump = rng.uniform(0, 1)
        r_low = build_field(base, g)
        r_high = build_field(base + bump, g)
        low = check_hypotheses(p, r_low).r_plus_below_p_minus
        high = check_hypotheses(p, r_high).r_plus_below_p_minus
        assert low or not high  # raising r cannot flip false -> true
