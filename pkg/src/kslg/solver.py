"""IMEX finite-volume integrator for the truncated chemotaxis system.

One step advances
    u_t = lap u - div(f_eps(u) grad v) + lambda(x) u - mu(x) u^kappa
    v_t = lap v - v + u
with zero-flux boundaries.  Diffusion (and the decay term of v) is implicit
via backward Euler and a matrix-free conjugate-gradient solve; the
chemotactic flux is explicit donor-cell upwind in flux form, so its cell sum
telescopes to zero exactly; the reaction uses a sign-split multiplicative
update that is positive for every dt and whose realized production/damping
integrals satisfy the discrete mass identity to linear-solver tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .exponents import ExponentSet
from .grid import (
    CoefficientField,
    Field,
    GridSpec,
    integrate_values,
    read_snapshot,
    write_snapshot,
)
from .profiles import smoothstep

CG_TOL = 1e-10
BLOWUP_LIMIT = 1e12


class SolverError(RuntimeError):
    pass


class StabilityError(SolverError):
    """dt violates the explicit-transport stability bound."""


class BlowupError(SolverError):
    def __init__(self, time: float):
        super().__init__(f"non-finite or divergent field at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True)
class TruncationSpec:
    """Flux cutoff f_eps: identity below 1/eps, zero above 2/eps, dominated
    by the identity in between.  The band interpolant is pluggable; the
    default quintic smoothstep keeps f_eps C^2."""

    epsilon: float
    band_profile: Callable = smoothstep

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        scaled = self.epsilon * s
        mid = s * self.band_profile(2.0 - scaled)
        return np.where(scaled <= 1.0, s, np.where(scaled >= 2.0, 0.0, mid))


def f_eps(s, eps: float):
    """Truncation value(s) with the default band profile."""
    out = TruncationSpec(eps)(s)
    return float(out) if np.isscalar(s) else out


@dataclass
class State:
    u: Field
    v: Field
    t: float

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("u and v must share a grid")


@dataclass(frozen=True)
class DtPolicy:
    kind: str  # "fixed" | "adaptive"
    dt: Optional[float] = None
    cfl: float = 0.45
    dt_max: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("fixed", "adaptive"):
            raise ValueError(f"unknown dt policy {self.kind!r}")
        if self.kind == "fixed" and (self.dt is None or self.dt <= 0):
            raise ValueError("fixed policy requires dt > 0")
        if self.kind == "adaptive" and (self.dt_max is None or self.dt_max <= 0):
            raise ValueError("adaptive policy requires dt_max > 0")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass
class RunConfig:
    grid: GridSpec
    coefficients: CoefficientField
    kappa: float
    trunc: TruncationSpec
    u0: Field
    v0: Field
    T: float
    dt_policy: DtPolicy
    output_every: int = 1
    c_tol: float = 0.1
    kappa_exact: Optional[Fraction] = None
    s_exact: Optional[Fraction] = None
    exponents: Optional[ExponentSet] = None
    seed: int = 0
    recipe: object = None  # resolution-independent generator, when available

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        for name, f in (("u0", self.u0), ("v0", self.v0)):
            if f.grid != self.grid:
                raise ValueError(f"{name} lives on a different grid")
            if np.any(f.values < 0):
                raise ValueError(f"{name} must be nonnegative")
        if self.coefficients.mu_vals.grid != self.grid:
            raise ValueError("coefficients live on a different grid")

    def with_epsilon(self, eps: float) -> "RunConfig":
        return replace(self, trunc=TruncationSpec(eps, self.trunc.band_profile))


@dataclass
class StepInfo:
    dt: float
    stable_bound: float
    growth_integral: float   # realized  int lambda_+ u* - lambda_- u_new
    damping_integral: float  # realized  int mu u*^(kappa-1) u_new
    cg_iters_u: int
    cg_iters_v: int


# -- discrete operators -----------------------------------------------------

def _laplacian(grid: GridSpec, a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    if grid.dim == 1:
        h = grid.spacing[0]
        flux = (a[1:] - a[:-1]) / h
        out[:-1] += flux / h
        out[1:] -= flux / h
    else:
        hx, hy = grid.spacing
        fx = (a[1:, :] - a[:-1, :]) / hx
        out[:-1, :] += fx / hx
        out[1:, :] -= fx / hx
        fy = (a[:, 1:] - a[:, :-1]) / hy
        out[:, :-1] += fy / hy
        out[:, 1:] -= fy / hy
    return out


def _chemo_divergence(grid: GridSpec, u: np.ndarray, v: np.ndarray,
                      trunc: TruncationSpec) -> np.ndarray:
    """div(f_eps(u_donor) grad v) with zero boundary-face fluxes."""
    out = np.zeros_like(u)
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        if grid.dim == 1:
            g = (v[1:] - v[:-1]) / h
            donor = np.where(g > 0, u[:-1], u[1:])
            flux = trunc(donor) * g
            out[:-1] += flux / h
            out[1:] -= flux / h
        elif axis == 0:
            g = (v[1:, :] - v[:-1, :]) / h
            donor = np.where(g > 0, u[:-1, :], u[1:, :])
            flux = trunc(donor) * g
            out[:-1, :] += flux / h
            out[1:, :] -= flux / h
        else:
            g = (v[:, 1:] - v[:, :-1]) / h
            donor = np.where(g > 0, u[:, :-1], u[:, 1:])
            flux = trunc(donor) * g
            out[:, :-1] += flux / h
            out[:, 1:] -= flux / h
    return out


def stable_dt_bound(grid: GridSpec, v: np.ndarray, cfl: float) -> float:
    """Largest stable dt for the explicit upwind transport stage: cfl
    divided by the per-cell sum of outflow face speeds (inf if no flow).
    Summing outflow faces per cell is what guarantees positivity; with a
    single active face it reduces to cfl * h / |grad v| at that face."""
    out = np.zeros_like(v)
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        if grid.dim == 1:
            g = (v[1:] - v[:-1]) / h
            out[:-1] += np.maximum(g, 0.0) / h
            out[1:] += np.maximum(-g, 0.0) / h
        elif axis == 0:
            g = (v[1:, :] - v[:-1, :]) / h
            out[:-1, :] += np.maximum(g, 0.0) / h
            out[1:, :] += np.maximum(-g, 0.0) / h
        else:
            g = (v[:, 1:] - v[:, :-1]) / h
            out[:, :-1] += np.maximum(g, 0.0) / h
            out[:, 1:] += np.maximum(-g, 0.0) / h
    m = float(out.max())
    return math.inf if m == 0.0 else cfl / m


def _cg(apply_a, b: np.ndarray, x0: np.ndarray, tol: float = CG_TOL,
        max_iter: Optional[int] = None) -> tuple[np.ndarray, int]:
    """Matrix-free conjugate gradients; terminates on ||r|| <= tol ||b||."""
    bnorm = math.sqrt(float(np.vdot(b, b).real))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    x = x0.copy()
    r = b - apply_a(x)
    rs = float(np.vdot(r, r).real)
    target = tol * bnorm
    if math.sqrt(rs) <= target:
        return x, 0
    p = r.copy()
    limit = max_iter if max_iter is not None else 20 * b.size
    for k in range(1, limit + 1):
        ap = apply_a(p)
        alpha = rs / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.vdot(r, r).real)
        if math.sqrt(rs_new) <= target:
            return x, k
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise SolverError("conjugate gradients failed to converge")


def _reaction(u: np.ndarray, lam: np.ndarray, mu: np.ndarray, kappa: float,
              dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positivity-safe sign-split multiplicative reaction update.

    Solves u_new (1 + dt lam_- + dt mu u^(k-1)) = u (1 + dt lam_+), so the
    per-cell identity u_new - u = dt (lam_+ u - lam_- u_new - mu u^(k-1) u_new)
    holds by construction and u_new >= 0 whenever u >= 0.
    """
    lam_p = np.maximum(lam, 0.0)
    lam_m = np.maximum(-lam, 0.0)
    damp = mu * u ** (kappa - 1.0)
    u_new = u * (1.0 + dt * lam_p) / (1.0 + dt * lam_m + dt * damp)
    growth = lam_p * u - lam_m * u_new
    damping = damp * u_new
    return u_new, growth, damping


def step_with_info(state: State, cfg: RunConfig, dt: float) -> tuple[State, StepInfo]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = cfg.grid
    u = state.u.values
    v = state.v.values
    bound = stable_dt_bound(grid, v, cfg.dt_policy.cfl)
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(
            f"dt = {dt:.3e} exceeds the stability bound {bound:.3e} at t = {state.t:.6g}"
        )

    # signal: implicit diffusion and decay, explicit source
    def apply_v(x):
        return (1.0 + dt) * x - dt * _laplacian(grid, x)

    v_new, it_v = _cg(apply_v, v + dt * u, v)

    # density: explicit upwind transport, implicit diffusion, then reaction
    w = u - dt * _chemo_divergence(grid, u, v, cfg.trunc)

    def apply_u(x):
        return x - dt * _laplacian(grid, x)

    u_diff, it_u = _cg(apply_u, w, w)
    u_new, growth, damping = _reaction(
        u_diff, cfg.coefficients.lambda_vals.values,
        cfg.coefficients.mu_vals.values, cfg.kappa, dt,
    )

    t_new = state.t + dt
    if (not np.all(np.isfinite(u_new)) or not np.all(np.isfinite(v_new))
            or u_new.max() > BLOWUP_LIMIT or v_new.max() > BLOWUP_LIMIT):
        raise BlowupError(t_new)

    info = StepInfo(
        dt=dt, stable_bound=bound,
        growth_integral=integrate_values(grid, growth),
        damping_integral=integrate_values(grid, damping),
        cg_iters_u=it_u, cg_iters_v=it_v,
    )
    new_state = State(Field(grid, u_new), Field(grid, v_new), t_new)
    return new_state, info


def step(state: State, cfg: RunConfig, dt: float) -> State:
    """Advance one IMEX step; raises StabilityError/BlowupError on trouble."""
    new_state, _ = step_with_info(state, cfg, dt)
    return new_state


def propose_dt(cfg: RunConfig, state: State, remaining: float) -> float:
    policy = cfg.dt_policy
    if policy.kind == "fixed":
        return min(policy.dt, remaining)
    dt = min(policy.dt_max, remaining)
    bound = stable_dt_bound(cfg.grid, state.v.values, policy.cfl)
    while dt > bound:
        dt *= 0.5
    return dt


# -- trajectories ------------------------------------------------------------

@dataclass
class Trajectory:
    """Snapshots of one run at the configured cadence (always includes the
    initial and final states).  A run stopped by the blow-up guard keeps its
    partial snapshot list and records the truncation time."""

    grid: GridSpec
    config: RunConfig
    times: list[float] = field(default_factory=list)
    u_snaps: list[np.ndarray] = field(default_factory=list)
    v_snaps: list[np.ndarray] = field(default_factory=list)
    completed: bool = True
    blowup_time: Optional[float] = None
    n_steps: int = 0

    def record(self, state: State) -> None:
        self.times.append(state.t)
        self.u_snaps.append(state.u.values.copy())
        self.v_snaps.append(state.v.values.copy())

    @property
    def final_state(self) -> State:
        return State(Field(self.grid, self.u_snaps[-1]),
                     Field(self.grid, self.v_snaps[-1]), self.times[-1])

    def save(self, outdir) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, (t, u, v) in enumerate(zip(self.times, self.u_snaps, self.v_snaps)):
            write_snapshot(outdir / f"snap_{i:06d}.kslg", self.grid, u, v, t)
        meta = [
            f"completed={int(self.completed)}",
            f"blowup_time={'' if self.blowup_time is None else repr(self.blowup_time)}",
            f"n_steps={self.n_steps}",
            f"n_snapshots={len(self.times)}",
            f"seed={self.config.seed}",
        ]
        from .ioutil import atomic_write_text

        atomic_write_text(outdir / "meta.txt", "\n".join(meta) + "\n")

    @classmethod
    def load(cls, outdir, config: RunConfig) -> "Trajectory":
        outdir = Path(outdir)
        paths = sorted(outdir.glob("snap_*.kslg"))
        if not paths:
            raise FileNotFoundError(f"no snapshots found in {outdir}")
        traj = cls(grid=config.grid, config=config)
        for p in paths:
            grid, u, v, t = read_snapshot(p)
            if grid != config.grid:
                raise ValueError(f"{p}: snapshot grid does not match the config")
            traj.times.append(t)
            traj.u_snaps.append(u)
            traj.v_snaps.append(v)
        meta_path = outdir / "meta.txt"
        if meta_path.exists():
            meta = dict(
                line.split("=", 1)
                for line in meta_path.read_text().splitlines() if "=" in line
            )
            traj.completed = meta.get("completed", "1") == "1"
            bt = meta.get("blowup_time", "")
            traj.blowup_time = float(bt) if bt else None
            traj.n_steps = int(meta.get("n_steps", len(traj.times) - 1))
        return traj


def run(cfg: RunConfig, outdir=None):
    """Integrate to T (or to the blow-up guard), accumulating diagnostics on
    the step grid and snapshots at the output cadence.  Deterministic for a
    given config.  Returns (Trajectory, DiagnosticsReport)."""
    from .diagnostics import DiagnosticsAccumulator

    state = State(cfg.u0.copy(), cfg.v0.copy(), 0.0)
    traj = Trajectory(grid=cfg.grid, config=cfg)
    traj.record(state)
    acc = DiagnosticsAccumulator(cfg, state)

    eps_t = 1e-12 * cfg.T
    step_index = 0
    try:
        while state.t < cfg.T - eps_t:
            dt = propose_dt(cfg, state, cfg.T - state.t)
            state, info = step_with_info(state, cfg, dt)
            acc.after_step(state, info)
            step_index += 1
            if step_index % cfg.output_every == 0 or state.t >= cfg.T - eps_t:
                traj.record(state)
    except BlowupError as exc:
        traj.completed = False
        traj.blowup_time = exc.time
        if traj.times[-1] != state.t:
            traj.record(state)
    except SolverError:
        # persist what exists, then let the caller see the failure
        traj.completed = False
        traj.n_steps = step_index
        if traj.times[-1] != state.t:
            traj.record(state)
        if outdir is not None:
            traj.save(outdir)
        raise

    traj.n_steps = step_index
    report = acc.finish(completed=traj.completed, blowup_time=traj.blowup_time)
    if outdir is not None:
        traj.save(outdir)
    return traj, report
