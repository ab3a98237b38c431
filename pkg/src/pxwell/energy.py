"""Potential-well machinery: energy/Nehari functionals, rays, depth, radii.

J(u) is the diffusion energy minus the source energy, I(u) the difference of
the corresponding modulars; the Nehari manifold is {I = 0}.  Because the
modulars are inhomogeneous under scaling when the exponents vary, every ray
evaluation I(lambda u), J(lambda u) needs a full quadrature -- there is no
power law to exploit.

Depth and level-set radii are sampled estimates: the depth upper bound is a
minimum of Nehari values over witnesses (refined by stochastic descent), and
the analytic lower bound is evaluated at a sampled embedding constant, which
makes it non-certified; both directions are reported with provenance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exponents import ExponentField
from .grid import Grid, GridFunction, cell_gradient_magnitude, project_mean_zero
from .norms import EmbeddingEstimate, l2_norm
from .witnesses import mode_catalogue, random_field

__all__ = [
    "EnergySnapshot",
    "DepthEstimate",
    "LevelRadii",
    "snapshot",
    "grad_modular",
    "source_modular",
    "ray_profile",
    "find_lambda_star",
    "estimate_depth",
    "estimate_level_radii",
    "depth_lower_formula",
]


@dataclass(frozen=True)
class EnergySnapshot:
    """The energy pair (J, I) and auxiliary modulars at one time."""

    t: float
    J: float
    I: float
    grad_modular: float
    source_modular: float
    delta0: float
    l2sq: float


@dataclass(frozen=True)
class DepthEstimate:
    """Two-sided (non-certified) information about the well depth.

    upper: best Nehari value found by sampling + descent (>= true depth).
    lower_formula: the analytic bound evaluated at a sampled embedding
    constant; since that constant is itself a lower bound raised to negative
    exponents, this number is not a certified lower bound and may exceed
    `upper`.
    """

    upper: float
    lower_formula: float
    witnesses: int
    B_used: str
    seed: int

    @property
    def ident(self) -> str:
        return f"depth-s{self.seed}-w{self.witnesses}"


@dataclass(frozen=True)
class LevelRadii:
    """Sampled min/max L2 norms over the Nehari slice at level s."""

    s: float
    lambda_s: float
    Lambda_s: float
    M_bound: Optional[float]
    kept: int


def grad_modular(u: GridFunction, p: ExponentField) -> float:
    gm = cell_gradient_magnitude(u)
    return u.grid.cell_volume * float(np.sum(gm**p.values))


def source_modular(u: GridFunction, r: ExponentField) -> float:
    return u.grid.cell_volume * float(np.sum(np.abs(u.values) ** r.values))


def snapshot(u: GridFunction, p: ExponentField, r: ExponentField, t: float = 0.0) -> EnergySnapshot:
    """Evaluate J, I and the modulars by cell-wise quadrature.

    The gradient magnitude is the RMS of adjacent face values per axis.
    delta0 is the source/diffusion modular ratio (NaN when the gradient
    modular vanishes).
    """
    vol = u.grid.cell_volume
    gm = cell_gradient_magnitude(u)
    gpow = gm**p.values
    spow = np.abs(u.values) ** r.values
    gmod = vol * float(np.sum(gpow))
    smod = vol * float(np.sum(spow))
    J = vol * float(np.sum(gpow / p.values)) - vol * float(np.sum(spow / r.values))
    delta0 = smod / gmod if gmod > 0.0 else float("nan")
    l2sq = vol * float(np.sum(u.values**2))
    return EnergySnapshot(t=float(t), J=J, I=gmod - smod, grad_modular=gmod,
                          source_modular=smod, delta0=delta0, l2sq=l2sq)


class _Ray:
    """Cached quadrature data for evaluating I and J along {lambda * u}."""

    def __init__(self, u: GridFunction, p: ExponentField, r: ExponentField):
        self.vol = u.grid.cell_volume
        self.gm = cell_gradient_magnitude(u)
        self.au = np.abs(u.values)
        self.pv = p.values
        self.rv = r.values

    def modulars(self, lam: float) -> tuple[float, float]:
        if lam == 0.0:
            return 0.0, 0.0
        g = self.vol * float(np.sum((lam * self.gm) ** self.pv))
        s = self.vol * float(np.sum((lam * self.au) ** self.rv))
        return g, s

    def I(self, lam: float) -> float:
        g, s = self.modulars(lam)
        return g - s

    def J(self, lam: float) -> float:
        if lam == 0.0:
            return 0.0
        g = self.vol * float(np.sum((lam * self.gm) ** self.pv / self.pv))
        s = self.vol * float(np.sum((lam * self.au) ** self.rv / self.rv))
        return g - s


def ray_profile(
    u: GridFunction,
    p: ExponentField,
    r: ExponentField,
    lambdas,
) -> list[tuple[float, float, float]]:
    """[(lambda, I(lambda u), J(lambda u))] by exact quadrature per lambda."""
    ray = _Ray(u, p, r)
    return [(float(lam), ray.I(float(lam)), ray.J(float(lam))) for lam in lambdas]


def find_lambda_star(
    u: GridFunction,
    p: ExponentField,
    r: ExponentField,
    tol: float = 1e-10,
) -> float:
    """Scaling that lands u on the Nehari manifold: I(lambda* u) = 0.

    Valid in the source-dominant regime r_minus > p_plus.  The bracket comes
    from the power bounds I(lam u) >= lam^{p_plus} a - lam^{r_minus} b for
    lam < 1 (and the reverse for lam >= 1), so a sign change is guaranteed
    for non-degenerate u.
    """
    if r.p_minus <= p.p_plus:
        raise ValueError("lambda* requires r_minus > p_plus")
    ray = _Ray(u, p, r)
    a, b = ray.modulars(1.0)
    if a <= 0.0:
        raise ValueError("degenerate trial field: zero gradient modular")
    if b <= 0.0:
        raise ValueError("degenerate trial field: zero source modular, I(lam u) > 0 for all lam")

    q = 1.0 / (r.p_minus - p.p_plus)
    lam_lo = 0.9 * min(1.0, (a / b) ** q)
    grows = 0
    while ray.I(lam_lo) <= 0.0:
        lam_lo *= 0.5
        grows += 1
        if grows > 200:
            raise ValueError("no positive bracket endpoint found (degenerate trial field)")
    lam_hi = max(1.1, 1.1 * (a / b) ** q)
    while ray.I(lam_hi) >= 0.0:
        lam_hi *= 2.0
        grows += 1
        if grows > 200:
            raise ValueError("no negative bracket endpoint found (degenerate trial field)")

    for _ in range(200):
        lam = 0.5 * (lam_lo + lam_hi)
        val = ray.I(lam)
        gmod, _ = ray.modulars(lam)
        if abs(val) <= tol * gmod:
            return lam
        if val > 0.0:
            lam_lo = lam
        else:
            lam_hi = lam
    return 0.5 * (lam_lo + lam_hi)


def depth_lower_formula(p: ExponentField, r: ExponentField, B_constant: float) -> float:
    """Analytic well-depth bound evaluated at an embedding constant."""
    e1 = r.p_plus * p.p_minus / (p.p_minus - r.p_plus)
    e2 = r.p_minus * p.p_plus / (p.p_plus - r.p_minus)
    coeff = (r.p_minus - p.p_plus) / (p.p_plus * r.p_minus)
    return coeff * min(B_constant**e1, B_constant**e2)


def _descend(
    u: GridFunction,
    p: ExponentField,
    r: ExponentField,
    J_start: float,
    rng: np.random.Generator,
    steps: int,
) -> float:
    """Greedy perturbation descent of the Nehari value from one witness.

    Pure function of (witness, rng state): per-witness seeding keeps the
    depth estimate monotone in the number of trials.
    """
    best = J_start
    w = u
    sigma = 0.3
    grid = u.grid
    for _ in range(steps):
        noise = random_field(grid, rng, amp_range=(1.0, 1.0))
        scale = np.max(np.abs(w.values)) or 1.0
        trial = project_mean_zero(GridFunction(grid, w.values + sigma * scale * noise.values))
        try:
            lam = find_lambda_star(trial, p, r)
        except ValueError:
            sigma *= 0.8
            continue
        ray = _Ray(trial, p, r)
        val = ray.J(lam)
        if val < best:
            best, w = val, trial
        else:
            sigma *= 0.8
    return best


def estimate_depth(
    grid: Grid,
    p: ExponentField,
    r: ExponentField,
    trials: int = 24,
    seed: int = 0,
    B_est: Optional[EmbeddingEstimate] = None,
    descent_steps: int = 50,
) -> DepthEstimate:
    """Sampled upper bound on the well depth plus the analytic formula bound.

    Witness draws are prefix-stable in `trials`, and the descent RNG is
    seeded per witness index, so doubling `trials` can only lower `upper`.
    """
    if r.p_minus <= p.p_plus:
        raise ValueError("depth estimation requires r_minus > p_plus")
    rng_draw = np.random.default_rng(seed)
    # fixed low-mode catalogue first, then a prefix-stable random sequence
    candidates = mode_catalogue(grid, kmax=2)
    for _ in range(trials):
        candidates.append(random_field(grid, rng_draw))
    upper = np.inf
    n_ok = 0
    for i, w in enumerate(candidates):
        try:
            lam = find_lambda_star(w, p, r)
        except ValueError:
            continue
        n_ok += 1
        ray = _Ray(w, p, r)
        val = ray.J(lam)
        if descent_steps > 0:
            rng_desc = np.random.default_rng((seed, 0xDE5C, i))
            val = _descend(GridFunction(grid, lam * w.values), p, r, val, rng_desc, descent_steps)
        upper = min(upper, val)
    if n_ok < 1:
        raise ValueError("no admissible witness produced a Nehari point")
    if not (upper > 0.0):
        raise ValueError(f"sampled depth upper bound is not positive: {upper}")
    lower = depth_lower_formula(p, r, B_est.constant) if B_est is not None else float("nan")
    return DepthEstimate(
        upper=float(upper),
        lower_formula=float(lower),
        witnesses=trials,
        B_used=B_est.ident if B_est is not None else "none",
        seed=seed,
    )


def level_radius_floor(
    p: ExponentField,
    r: ExponentField,
    depth: float,
    ctilde: EmbeddingEstimate,
    N: int,
) -> Optional[float]:
    """s-independent floor for the minimal L2 norm on Nehari slices.

    Defined when 2 <= r_plus <= (1 + 2/N) p_minus; evaluated at the sampled
    interpolation constant, hence non-certified.
    """
    if not (2.0 <= r.p_plus <= (1.0 + 2.0 / N) * p.p_minus):
        return None
    theta = ctilde.theta
    if theta is None or not (0.0 < theta < 1.0):
        return None
    base = p.p_minus * r.p_plus * depth / (r.p_plus - p.p_minus)
    e1 = 1.0 / r.p_plus - theta / p.p_minus
    e2 = 1.0 / r.p_minus - theta / p.p_plus
    c = 1.0 / ctilde.constant
    return float(min((c * base**e1) ** (1.0 / (1.0 - theta)),
                     (c * base**e2) ** (1.0 / (1.0 - theta))))


def estimate_level_radii(
    grid: Grid,
    s: float,
    p: ExponentField,
    r: ExponentField,
    samples: int = 48,
    seed: int = 0,
    depth_upper: Optional[float] = None,
    ctilde: Optional[EmbeddingEstimate] = None,
    N: Optional[int] = None,
) -> LevelRadii:
    """Sampled extremes of the L2 norm over the Nehari slice {I=0, J<=s}."""
    if depth_upper is not None and not (s > depth_upper):
        raise ValueError(f"level s={s} must exceed the depth upper estimate {depth_upper}")
    if N is None:
        N = grid.dimension
    rng = np.random.default_rng(seed)
    candidates = mode_catalogue(grid, kmax=2)
    for _ in range(samples):
        candidates.append(random_field(grid, rng))
    norms = []
    for w in candidates:
        try:
            lam = find_lambda_star(w, p, r)
        except ValueError:
            continue
        ray = _Ray(w, p, r)
        if ray.J(lam) <= s:
            norms.append(l2_norm(GridFunction(grid, lam * w.values)))
    if not norms:
        raise ValueError(
            f"no sampled Nehari point has J <= {s}; increase s or the sample count"
        )
    m_bound = None
    if ctilde is not None and depth_upper is not None:
        m_bound = level_radius_floor(p, r, depth_upper, ctilde, N)
    return LevelRadii(
        s=float(s),
        lambda_s=float(min(norms)),
        Lambda_s=float(max(norms)),
        M_bound=m_bound,
        kept=len(norms),
    )
