"""Radial quadrature showing the modular Poincare inequality can fail.

On nested balls of radii 1, 2, 3 in R^3, a piecewise-linear exponent profile
and a piecewise-linear radial function are scaled by epsilon > 1; the
gradient modular grows like eps^{3/2} (eps - 1)/ln(eps) while the function
modular grows like eps^{5/2}, so the Rayleigh-type quotient of modulars
decays to zero as eps grows -- no constant can bound it from below.

All integrals are 4 pi int r^2 f(r) dr computed by Gauss-Legendre panels
aligned with the profile kinks at r = 1 and r = 2, with a node-doubling
agreement check on every reported value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "exponent_profile",
    "radial_profile",
    "radial_slope",
    "continuity_gaps",
    "profile_mean",
    "gradient_modular",
    "gradient_modular_inner",
    "function_modular",
    "shell_modular_exact",
    "quotient_sweep",
    "SweepRow",
]

_PIECES = ((0.0, 1.0), (1.0, 2.0), (2.0, 3.0))
_SLOPE_OUTER = 104.0 / 172.0


def exponent_profile(rr: np.ndarray) -> np.ndarray:
    """Piecewise exponent: 3/2 + r, then 5/2, then 9/2 - r."""
    rr = np.asarray(rr, dtype=float)
    return np.where(rr < 1.0, 1.5 + rr, np.where(rr < 2.0, 2.5, 4.5 - rr))


def radial_profile(rr: np.ndarray) -> np.ndarray:
    """Piecewise radial function: 3/4 - r, then -1/4, then (104 r - 251)/172."""
    rr = np.asarray(rr, dtype=float)
    return np.where(rr < 1.0, 0.75 - rr, np.where(rr < 2.0, -0.25, (104.0 * rr - 251.0) / 172.0))


def radial_slope(rr: np.ndarray) -> np.ndarray:
    rr = np.asarray(rr, dtype=float)
    return np.where(rr < 1.0, -1.0, np.where(rr < 2.0, 0.0, _SLOPE_OUTER))


def continuity_gaps() -> dict[str, float]:
    """Jumps of the exponent and function values at the interface radii."""
    return {
        "p_at_1": abs((1.5 + 1.0) - 2.5),
        "p_at_2": abs(2.5 - (4.5 - 2.0)),
        "u_at_1": abs((0.75 - 1.0) - (-0.25)),
        "u_at_2": abs((-0.25) - (104.0 * 2.0 - 251.0) / 172.0),
    }


def _panel_quad(fn, lo: float, hi: float, n: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    return 0.5 * (hi - lo) * float(np.sum(weights * fn(x)))


def _radial_integral(fn, n_quad: int, pieces=_PIECES) -> float:
    """4 pi int r^2 fn(r) dr with piece-aligned Gauss panels."""
    total = sum(_panel_quad(lambda r: r * r * fn(r), lo, hi, n_quad) for lo, hi in pieces)
    return 4.0 * np.pi * total


def _checked(fn, n_quad: int, pieces=_PIECES, rel_tol: float = 1e-8) -> float:
    """Node-doubling agreement guard; returns the finer value.

    Agreement is measured against the integral of |fn|, so exact cancellation
    (a genuinely zero integral) does not trip the guard.
    """
    coarse = _radial_integral(fn, n_quad, pieces)
    fine = _radial_integral(fn, 2 * n_quad, pieces)
    scale = _radial_integral(lambda r: np.abs(fn(r)), 2 * n_quad, pieces)
    if abs(fine - coarse) > rel_tol * (abs(scale) + 1e-300):
        raise ValueError(
            f"quadrature disagreement {abs(fine - coarse):.3e} at n={n_quad}; integrand not resolved"
        )
    return fine


def profile_mean(n_quad: int = 64) -> float:
    """Mean of the unscaled radial function over the big ball (analytically 0)."""
    vol = 4.0 / 3.0 * np.pi * 27.0
    return _checked(radial_profile, n_quad) / vol


def gradient_modular(epsilon: float, n_quad: int = 64) -> float:
    """Gradient modular of the eps-scaled profile over the big ball."""
    if epsilon <= 1.0:
        raise ValueError("epsilon must exceed 1")
    if n_quad < 64:
        raise ValueError("n_quad must be at least 64")
    return _checked(lambda r: np.abs(epsilon * radial_slope(r)) ** exponent_profile(r), n_quad)


def gradient_modular_inner(epsilon: float, n_quad: int = 64) -> float:
    """Contribution of the inner ball alone (the middle shell contributes 0)."""
    if epsilon <= 1.0:
        raise ValueError("epsilon must exceed 1")
    return _checked(
        lambda r: np.abs(epsilon * radial_slope(r)) ** exponent_profile(r),
        n_quad,
        pieces=(_PIECES[0],),
    )


def _function_pieces(epsilon: float, shift: float) -> tuple[tuple[float, float], ...]:
    """Panels split at the kinks (r = 1, 2) and at interior zeros of the
    shifted profile, where |.|^{p(r)} loses smoothness."""
    cuts = {0.0, 1.0, 2.0, 3.0}
    level = shift / epsilon
    z_inner = 0.75 - level  # zero of (3/4 - r) - level
    if 0.0 < z_inner < 1.0:
        cuts.add(z_inner)
    z_outer = (251.0 + 172.0 * level) / 104.0  # zero of (104 r - 251)/172 - level
    if 2.0 < z_outer < 3.0:
        cuts.add(z_outer)
    ordered = sorted(cuts)
    return tuple(zip(ordered, ordered[1:]))


def function_modular(epsilon: float, n_quad: int = 64, shift: float = 0.0) -> float:
    """Function modular of the eps-scaled (optionally shifted) profile."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    return _checked(
        lambda r: np.abs(epsilon * radial_profile(r) - shift) ** exponent_profile(r),
        n_quad,
        pieces=_function_pieces(epsilon, shift),
    )


def function_modular_shell(epsilon: float, n_quad: int = 64) -> float:
    """Middle-shell contribution; closed form is (7 pi / 24) eps^{5/2}."""
    return _checked(
        lambda r: np.abs(epsilon * radial_profile(r)) ** exponent_profile(r),
        n_quad,
        pieces=(_PIECES[1],),
    )


def shell_modular_exact(epsilon: float) -> float:
    """(4 pi / 3)(2^3 - 1^3) (eps/4)^{5/2} = (7 pi / 24) eps^{5/2}."""
    return 7.0 * np.pi / 24.0 * epsilon**2.5


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    numerator: float
    denominator: float
    quotient: float
    bound: float


def quotient_bound(epsilon: float) -> float:
    """960 (eps - 1) / (7 eps ln eps)."""
    return 960.0 * (epsilon - 1.0) / (7.0 * epsilon * np.log(epsilon))


def quotient_sweep(epsilons, n_quad: int = 64) -> list[SweepRow]:
    """Quotients along an increasing epsilon sweep, checked against the
    closed-form bound and for strict decrease from e^2 on."""
    eps = [float(e) for e in epsilons]
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly increasing")
    rows = []
    for e in eps:
        num = gradient_modular(e, n_quad)
        den = function_modular(e, n_quad)
        q = num / den
        bound = quotient_bound(e)
        if q > bound:
            raise AssertionError(
                f"quotient {q} exceeds bound {bound} at eps={e}: "
                f"numerator={num}, denominator={den}"
            )
        rows.append(SweepRow(e, num, den, q, bound))
    prev = None
    for row in rows:
        if row.epsilon >= np.e**2:
            if prev is not None and not (row.quotient < prev):
                raise AssertionError(
                    f"quotient not strictly decreasing at eps={row.epsilon}"
                )
            prev = row.quotient
    return rows
