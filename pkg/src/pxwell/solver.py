"""Time integration of the nonlocal Neumann diffusion problem.

Explicit Euler with energy-residual step control: a step is accepted only if
the discrete energy identity

    J(u+) - J(u) + dt ||(u+ - u)/dt||_2^2  ~  0

holds to the configured tolerance.  The J used for this audit is the
face-quadrature potential from `grid.dirichlet_energy` minus the source
energy; its L2 gradient equals the discrete right-hand side exactly, so the
residual is a pure time-discretization remainder and halving dt on rejection
always wins eventually.  Snapshots report the cell-RMS quadrature J used by
the classification layer; the two agree up to spatial-quadrature differences.

Blow-up is declared when the sup norm crosses the configured threshold (a
finite trigger yields a lower bound on the escape time), or when dt collapses
below dt_min while the sup norm is still climbing; a dt collapse without
growth is reported as stalling, not blow-up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exponents import ExponentField
from .grid import (
    Grid,
    GridFunction,
    _dirichlet_energy_from_pf,
    _flux_divergence_from_pf,
    face_exponents,
    project_mean_zero,
)
from .energy import EnergySnapshot, snapshot

__all__ = [
    "SolverConfig",
    "Outcome",
    "Trajectory",
    "step",
    "simulate",
    "audit_trajectory",
    "AuditReport",
    "blowup_functional",
    "BlowupFunctional",
    "delta0_hat",
    "trajectory_csv",
]

GLOBAL_UNTIL_TEND = "GlobalUntilTend"
BLOWUP_DETECTED = "BlowupDetected"
STALLED_DT = "StalledDt"


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-5
    dt_min: float = 1e-18
    dt_max: float = 1e-2
    t_end: float = 1.0
    energy_tol: float = 1e-6
    blowup_threshold: float = 1e6
    delta: float = 1e-8
    record_every: int = 1

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class Outcome:
    kind: str
    t_b: Optional[float] = None


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list[EnergySnapshot]
    outcome: Outcome
    step_count: int
    energy_budget_used: float
    linf: np.ndarray
    dt_at_snapshot: np.ndarray
    max_rel_residual: float
    residual_sum: float
    mean_drift_max: float
    rejected_steps: int = 0
    internal_J: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _source(u_values: np.ndarray, r_values: np.ndarray) -> np.ndarray:
    # sign(u)|u|^{r-1}; zero at u = 0 since r > 1
    return np.sign(u_values) * np.abs(u_values) ** (r_values - 1.0)


def step(
    u: GridFunction,
    p: ExponentField,
    r: ExponentField,
    dt: float,
    delta: float = 1e-8,
    with_source: bool = True,
) -> GridFunction:
    """One explicit Euler step; the mean-corrected source keeps the spatial
    mean of u conserved to round-off."""
    pf = face_exponents(p.values)
    rhs = _flux_divergence_from_pf(u.values, u.grid, pf, delta)
    if with_source:
        s = _source(u.values, r.values)
        rhs = rhs + (s - u.grid.cell_volume * np.sum(s) / u.grid.volume)
    return GridFunction(u.grid, u.values + dt * rhs)


def simulate(
    u0: GridFunction,
    p: ExponentField,
    r: ExponentField,
    cfg: SolverConfig,
    with_source: bool = True,
) -> Trajectory:
    grid = u0.grid
    vol = grid.cell_volume
    omega = grid.volume
    pf = face_exponents(p.values)
    rv = r.values
    delta = cfg.delta

    def rhs_of(uv: np.ndarray) -> np.ndarray:
        out = _flux_divergence_from_pf(uv, grid, pf, delta)
        if with_source:
            s = _source(uv, rv)
            out = out + (s - vol * np.sum(s) / omega)
        return out

    def source_energy(uv: np.ndarray) -> float:
        if not with_source:
            return 0.0
        return vol * float(np.sum(np.abs(uv) ** rv / rv))

    def internal_J(uv: np.ndarray) -> float:
        return _dirichlet_energy_from_pf(uv, grid, pf, delta) - source_energy(uv)

    u = project_mean_zero(u0).values
    t = 0.0
    dt = cfg.dt_init
    Jf = internal_J(u)

    snaps = [snapshot(GridFunction(grid, u), p, r, t=0.0)]
    times = [0.0]
    linfs = [float(np.max(np.abs(u)))]
    dts = [dt]
    internal = [Jf]

    steps = 0
    rejected = 0
    budget = 0.0
    max_rel_res = 0.0
    res_sum = 0.0
    drift_max = 0.0
    consec = 0
    since_record = 0
    outcome: Optional[Outcome] = None
    linf_hist = [linfs[0]]

    def record(dt_now: float) -> None:
        snaps.append(snapshot(GridFunction(grid, u), p, r, t=t))
        times.append(t)
        linfs.append(float(np.max(np.abs(u))))
        dts.append(dt_now)
        internal.append(Jf)

    while t < cfg.t_end:
        dt_eff = min(dt, cfg.t_end - t)
        u_new = u + dt_eff * rhs_of(u)
        accepted = False
        if np.all(np.isfinite(u_new)):
            J_new = internal_J(u_new)
            diff = (u_new - u) / dt_eff
            udot2 = vol * float(np.sum(diff * diff))
            residual = abs(J_new - Jf + dt_eff * udot2)
            accepted = np.isfinite(J_new) and residual <= cfg.energy_tol * (1.0 + abs(Jf))

        if accepted:
            # re-zero the mean: analytically a no-op, keeps round-off drift flat
            u = u_new - np.sum(u_new) / u_new.size
            t += dt_eff
            steps += 1
            consec += 1
            since_record += 1
            budget += dt_eff * udot2
            res_sum += residual
            max_rel_res = max(max_rel_res, residual / (1.0 + abs(Jf)))
            Jf = internal_J(u)
            l2 = np.sqrt(vol * float(np.sum(u * u)))
            drift_max = max(drift_max, abs(vol * float(np.sum(u))) / (1.0 + l2))
            supn = float(np.max(np.abs(u)))
            linf_hist.append(supn)
            if len(linf_hist) > 64:
                linf_hist.pop(0)
            if consec >= 5:
                dt = min(dt * 1.25, cfg.dt_max)
                consec = 0
            if since_record >= cfg.record_every:
                record(dt_eff)
                since_record = 0
            if supn >= cfg.blowup_threshold:
                outcome = Outcome(BLOWUP_DETECTED, t_b=t)
                break
        else:
            rejected += 1
            consec = 0
            dt *= 0.5
            if dt < cfg.dt_min:
                growing = len(linf_hist) >= 2 and linf_hist[-1] > 1.05 * min(linf_hist)
                if growing:
                    outcome = Outcome(BLOWUP_DETECTED, t_b=t)
                else:
                    outcome = Outcome(STALLED_DT)
                break

    if outcome is None:
        outcome = Outcome(GLOBAL_UNTIL_TEND)
    if times[-1] != t or since_record > 0:
        record(dt)

    return Trajectory(
        times=np.array(times),
        snapshots=snaps,
        outcome=outcome,
        step_count=steps,
        energy_budget_used=budget,
        linf=np.array(linfs),
        dt_at_snapshot=np.array(dts),
        max_rel_residual=max_rel_res,
        residual_sum=res_sum,
        mean_drift_max=drift_max,
        rejected_steps=rejected,
        internal_J=np.array(internal),
    )


@dataclass(frozen=True)
class AuditReport:
    j_nonincreasing: bool
    max_j_uptick_rel: float
    l2_rate_max_rel_err: float
    l2_rate_ok: bool
    i_sign_persistent: Optional[bool]
    mean_drift_max: float
    mean_drift_ok: bool


def audit_trajectory(
    traj: Trajectory,
    d_hat: Optional[float] = None,
    j_tol: float = 1e-3,
    rate_tol: float = 0.05,
    drift_tol: float = 1e-12,
) -> AuditReport:
    """Consistency checks on a recorded trajectory.

    (a) snapshot J non-increasing within a relative allowance (the snapshot
        quadrature differs from the stepper's internal energy by a spatial
        quadrature term);
    (b) central differences of ||u||_2^2 against -2 I, relative;
    (c) when the initial energy sits below a supplied depth estimate, the
        sign of I must not flip (discrete invariant-set check);
    (d) spatial-mean drift.
    """
    if len(traj.snapshots) < 2:
        raise ValueError("need at least 2 snapshots to audit")
    J = np.array([s.J for s in traj.snapshots])
    Ivals = np.array([s.I for s in traj.snapshots])
    l2sq = np.array([s.l2sq for s in traj.snapshots])
    t = traj.times

    upticks = (J[1:] - J[:-1]) / (1.0 + np.abs(J[:-1]))
    max_uptick = float(upticks.max()) if upticks.size else 0.0
    j_ok = max_uptick <= j_tol

    max_rel = 0.0
    for k in range(1, len(t) - 1):
        dtk = t[k + 1] - t[k - 1]
        if dtk <= 0.0:
            continue
        rate = (l2sq[k + 1] - l2sq[k - 1]) / dtk
        target = -2.0 * Ivals[k]
        if rate == 0.0 and target == 0.0:
            continue
        denom = max(abs(target), 1e-300)
        max_rel = max(max_rel, abs(rate - target) / denom)

    sign_ok: Optional[bool] = None
    if d_hat is not None and traj.snapshots[0].J < d_hat:
        scale = 1e-12 * (1.0 + np.abs(Ivals).max())
        signs = np.sign(Ivals[np.abs(Ivals) > scale])
        sign_ok = bool(signs.size == 0 or np.all(signs == signs[0]))

    return AuditReport(
        j_nonincreasing=bool(j_ok),
        max_j_uptick_rel=max_uptick,
        l2_rate_max_rel_err=float(max_rel),
        l2_rate_ok=bool(max_rel <= rate_tol),
        i_sign_persistent=sign_ok,
        mean_drift_max=traj.mean_drift_max,
        mean_drift_ok=bool(traj.mean_drift_max <= drift_tol),
    )


class BlowupFunctional(NamedTuple):
    t: np.ndarray
    M: np.ndarray
    M_prime: np.ndarray
    M_second_proxy: np.ndarray
    diagnostic: np.ndarray


def blowup_functional(traj: Trajectory, r_minus: float) -> BlowupFunctional:
    """Time integral of ||u||_2^2 with its derivatives and the concavity
    diagnostic M'' M - ((r_minus + 2)/4) (M')^2 (positive in the escape
    regime)."""
    t = traj.times
    l2sq = np.array([s.l2sq for s in traj.snapshots])
    Ivals = np.array([s.I for s in traj.snapshots])
    M = np.zeros_like(t)
    if len(t) > 1:
        incr = 0.5 * (l2sq[1:] + l2sq[:-1]) * np.diff(t)
        M[1:] = np.cumsum(incr)
    Mp = l2sq
    Mpp = -2.0 * Ivals
    diag = Mpp * M - 0.25 * (r_minus + 2.0) * Mp**2
    return BlowupFunctional(t=t, M=M, M_prime=Mp, M_second_proxy=Mpp, diagnostic=diag)


def delta0_hat(traj: Trajectory) -> float:
    """Running maximum of the source/diffusion modular ratio (NaN-safe)."""
    ratios = [s.delta0 for s in traj.snapshots if np.isfinite(s.delta0)]
    return max(ratios) if ratios else float("nan")


def trajectory_csv(traj: Trajectory) -> str:
    """Deterministic CSV serialization (shortest round-trip float format)."""
    lines = ["t,l2,linf,grad_modular,source_modular,J,I,delta0,dt"]
    for k, s in enumerate(traj.snapshots):
        row = [
            s.t,
            np.sqrt(max(s.l2sq, 0.0)),
            traj.linf[k],
            s.grad_modular,
            s.source_modular,
            s.J,
            s.I,
            s.delta0,
            traj.dt_at_snapshot[k],
        ]
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
