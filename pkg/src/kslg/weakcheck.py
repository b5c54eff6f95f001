"""Generalized-solution residuals of discrete trajectories.

Checks a trajectory against the three defining relations of the
generalized-solution concept: the mass subsolution inequality for u, the
logarithmic supersolution inequality tested against nonnegative space-time
test functions, and the weak form of the signal equation.

Test functions are closed-form products phi(x, t) = B(x) tau(t): B is a
tensor product of quintic bumps supported strictly inside a sub-box (or
identically one), tau a quintic ramp or bump in time supported in [0, T_cut]
with T_cut < T.  Space quadrature is midpoint at cell centers; gradient
pairings live on interior faces with phi and grad phi evaluated exactly at
face midpoints.  Time quadrature is trapezoidal on the snapshot grid, except
that terms in phi_t pair field averages with exact increments of tau, which
makes the fundamental-theorem cancellation exact for constant fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import GridSpec
from .ioutil import csv_text
from .profiles import bump, bump_deriv, falling_step, falling_step_deriv

RELATION_MASS = "2.4"
RELATION_LOG = "2.5"
RELATION_SIGNAL = "2.6"

WEAKCHECK_COLUMNS = ["relation", "test_id", "value", "tol", "pass"]


@dataclass(frozen=True)
class TestFunction:
    """Separable space-time test function B(x) tau(t), nonnegative by
    construction.  ``x_support``/``y_support`` give the bump sub-box per
    axis (None means constant 1 along that axis); tau is either a falling
    ramp with tau(0) = amplitude ("early") or an interior bump ("late")."""

    __test__ = False  # not a pytest class

    name: str
    x_support: Optional[tuple[float, float]]
    y_support: Optional[tuple[float, float]]
    tau_kind: str
    tau_window: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        if self.tau_kind not in ("early", "late"):
            raise ValueError(f"unknown tau kind {self.tau_kind!r}")
        if self.amplitude < 0:
            raise ValueError("test functions must be nonnegative")
        if self.tau_kind == "early" and len(self.tau_window) != 1:
            raise ValueError("early tau takes one window value (t_cut)")
        if self.tau_kind == "late" and len(self.tau_window) != 2:
            raise ValueError("late tau takes a (t_lo, t_hi) window")

    @property
    def tau_end(self) -> float:
        return self.tau_window[-1]

    def tau(self, t: float) -> float:
        if self.tau_kind == "early":
            return self.amplitude * float(falling_step(t, self.tau_window[0]))
        lo, hi = self.tau_window
        return self.amplitude * float(bump(t, lo, hi))

    def tau_dot(self, t: float) -> float:
        if self.tau_kind == "early":
            return self.amplitude * float(falling_step_deriv(t, self.tau_window[0]))
        lo, hi = self.tau_window
        return self.amplitude * float(bump_deriv(t, lo, hi))

    def _axis_profile(self, axis: int, coords: np.ndarray, deriv: bool) -> np.ndarray:
        support = self.x_support if axis == 0 else self.y_support
        if support is None:
            return np.zeros_like(coords) if deriv else np.ones_like(coords)
        if deriv:
            return bump_deriv(coords, *support)
        return bump(coords, *support)

    def space_terms(self, grid: GridSpec) -> "SpaceTerms":
        return SpaceTerms.build(self, grid)


@dataclass
class SpaceTerms:
    """B evaluated where the quadrature needs it: cell centers, interior
    face midpoints, and the spatial gradient at face midpoints."""

    centers: np.ndarray
    faces: list[np.ndarray]
    grad_faces: list[np.ndarray]

    @classmethod
    def build(cls, tf: TestFunction, grid: GridSpec) -> "SpaceTerms":
        axis_c = [tf._axis_profile(a, grid.axis_centers(a), deriv=False)
                  for a in range(grid.dim)]
        axis_d = [tf._axis_profile(a, grid.axis_centers(a), deriv=True)
                  for a in range(grid.dim)]
        axis_f = [tf._axis_profile(a, grid.axis_faces(a)[1:-1], deriv=False)
                  for a in range(grid.dim)]
        axis_fd = [tf._axis_profile(a, grid.axis_faces(a)[1:-1], deriv=True)
                   for a in range(grid.dim)]
        if grid.dim == 1:
            return cls(centers=axis_c[0], faces=[axis_f[0]], grad_faces=[axis_fd[0]])
        cx, cy = axis_c
        centers = np.outer(cx, cy)
        faces = [np.outer(axis_f[0], cy), np.outer(cx, axis_f[1])]
        grad_faces = [np.outer(axis_fd[0], cy), np.outer(cx, axis_fd[1])]
        return cls(centers=centers, faces=faces, grad_faces=grad_faces)


def catalogue_tests(grid: GridSpec, T: float) -> list[TestFunction]:
    """Fixed family of 8 test functions: {constant, centered, off-center,
    anisotropic} x {early, late}.  Bumps sit strictly inside the domain;
    early taus carry a nonzero initial trace."""
    ext = grid.extent
    half = [0.5 * e for e in ext]

    def box(axis, lo_frac, hi_frac):
        return (lo_frac * 2 * half[axis], hi_frac * 2 * half[axis])

    shapes: list[tuple[str, Optional[tuple], Optional[tuple]]] = [
        ("const", None, None),
        ("center", box(0, -0.35, 0.35), box(1, -0.35, 0.35) if grid.dim == 2 else None),
        ("offcenter", box(0, -0.45, 0.05), box(1, -0.05, 0.45) if grid.dim == 2 else None),
        ("aniso", box(0, -0.4, 0.4), box(1, -0.15, 0.3) if grid.dim == 2 else None),
    ]
    taus = [("early", ("early", (0.5 * T,))), ("late", ("late", (0.25 * T, 0.75 * T)))]
    out = []
    for sname, xs, ys in shapes:
        for tname, (kind, window) in taus:
            out.append(TestFunction(
                name=f"{sname}_{tname}", x_support=xs, y_support=ys,
                tau_kind=kind, tau_window=window,
            ))
    return out


def _validate_tests(traj, tests: list[TestFunction]) -> None:
    t_final = traj.times[-1]
    for tf in tests:
        if tf.amplitude < 0:
            raise ValueError(f"{tf.name}: negative amplitude")
        if not tf.tau_end < t_final:
            raise ValueError(
                f"{tf.name}: tau support [0, {tf.tau_end}] must end before T = {t_final}"
            )


def _face_areas(grid: GridSpec) -> list[float]:
    vol = grid.cell_volume
    return [vol / h for h in grid.spacing]


def _face_diffs(grid: GridSpec, a: np.ndarray, axis: int) -> np.ndarray:
    if grid.dim == 1:
        return a[1:] - a[:-1]
    if axis == 0:
        return a[1:, :] - a[:-1, :]
    return a[:, 1:] - a[:, :-1]


def _face_avg(grid: GridSpec, a: np.ndarray, axis: int) -> np.ndarray:
    if grid.dim == 1:
        return 0.5 * (a[1:] + a[:-1])
    if axis == 0:
        return 0.5 * (a[1:, :] + a[:-1, :])
    return 0.5 * (a[:, 1:] + a[:, :-1])


def _trapezoid_weights(times: list[float]) -> np.ndarray:
    t = np.asarray(times)
    w = np.zeros_like(t)
    w[:-1] += 0.5 * np.diff(t)
    w[1:] += 0.5 * np.diff(t)
    return w


def mass_subsolution_check(traj, tol: float) -> np.ndarray:
    """Slack of the mass subsolution relation at every snapshot time:
    int u(T) - int u0 - int int lambda u + int int mu u^kappa, required
    <= tol.  Returns the slack series."""
    grid = traj.grid
    vol = grid.cell_volume
    lam = traj.config.coefficients.lambda_vals.values
    mu = traj.config.coefficients.mu_vals.values
    kappa = traj.config.kappa
    times = traj.times
    mass = np.array([u.sum() * vol for u in traj.u_snaps])
    lam_rate = np.array([(lam * u).sum() * vol for u in traj.u_snaps])
    damp_rate = np.array([(mu * u**kappa).sum() * vol for u in traj.u_snaps])
    dt = np.diff(np.asarray(times))
    lam_cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (lam_rate[:-1] + lam_rate[1:]))])
    damp_cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (damp_rate[:-1] + damp_rate[1:]))])
    return mass - mass[0] - lam_cum + damp_cum


def log_supersolution_check(traj, tests: list[TestFunction], tol: float) -> dict[str, float]:
    """Slack (left side minus right side) of the logarithmic supersolution
    relation per test function; each must be >= -tol."""
    _validate_tests(traj, tests)
    grid = traj.grid
    vol = grid.cell_volume
    areas = _face_areas(grid)
    lam = traj.config.coefficients.lambda_vals.values
    mu = traj.config.coefficients.mu_vals.values
    kappa = traj.config.kappa
    trunc = traj.config.trunc
    times = traj.times
    w = _trapezoid_weights(times)

    slacks = {}
    for tf in tests:
        sp = tf.space_terms(grid)
        tau = np.array([tf.tau(t) for t in times])
        ln_b = np.zeros(len(times))
        rhs_k = np.zeros(len(times))
        for k, (u, v) in enumerate(zip(traj.u_snaps, traj.v_snaps)):
            ln1p = np.log1p(u)
            chi = trunc(u) / (u + 1.0)
            ln_b[k] = float((ln1p * sp.centers).sum()) * vol
            t1 = t2 = t3 = t4 = 0.0
            for axis in range(grid.dim):
                h = grid.spacing[axis]
                a_f = areas[axis]
                dln = _face_diffs(grid, ln1p, axis)
                dv = _face_diffs(grid, v, axis)
                chi_f = _face_avg(grid, chi, axis)
                bf = sp.faces[axis]
                dbf = sp.grad_faces[axis]
                t1 += float((dln * dln / h * bf).sum()) * a_f
                t2 += float((dln * dbf).sum()) * a_f
                t3 += float((chi_f * dln * dv / h * bf).sum()) * a_f
                t4 += float((chi_f * dv * dbf).sum()) * a_f
            t5 = float((lam * u / (u + 1.0) * sp.centers).sum()) * vol
            t6 = float((mu * u**kappa / (u + 1.0) * sp.centers).sum()) * vol
            rhs_k[k] = t1 - t2 - t3 + t4 + t5 - t6
        lhs = -float(np.sum(0.5 * (ln_b[:-1] + ln_b[1:]) * np.diff(tau)))
        lhs -= ln_b[0] * tau[0]
        rhs = float(np.sum(w * tau * rhs_k))
        slacks[tf.name] = lhs - rhs
    return slacks


def v_weak_check(traj, tests: list[TestFunction], tol: float) -> dict[str, float]:
    """Signed residual of the weak signal relation per test function; the
    relation holds when |residual| <= tol."""
    _validate_tests(traj, tests)
    grid = traj.grid
    vol = grid.cell_volume
    areas = _face_areas(grid)
    times = traj.times
    w = _trapezoid_weights(times)

    residuals = {}
    for tf in tests:
        sp = tf.space_terms(grid)
        tau = np.array([tf.tau(t) for t in times])
        v_b = np.array([float((v * sp.centers).sum()) * vol for v in traj.v_snaps])
        u_b = np.array([float((u * sp.centers).sum()) * vol for u in traj.u_snaps])
        grad_k = np.zeros(len(times))
        for k, v in enumerate(traj.v_snaps):
            g = 0.0
            for axis in range(grid.dim):
                dv = _face_diffs(grid, v, axis)
                g += float((dv * sp.grad_faces[axis]).sum()) * areas[axis]
            grad_k[k] = g
        term_vt = float(np.sum(0.5 * (v_b[:-1] + v_b[1:]) * np.diff(tau)))
        residual = (-term_vt - v_b[0] * tau[0]
                    + float(np.sum(w * tau * grad_k))
                    + float(np.sum(w * tau * v_b))
                    - float(np.sum(w * tau * u_b)))
        residuals[tf.name] = residual
    return residuals


@dataclass
class WeakResiduals:
    """All three relation residuals for one trajectory, plus verdict rows."""

    times: np.ndarray
    mass_slack: np.ndarray
    log_slack: dict[str, float]
    signal_residual: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        ok_mass = bool(np.all(self.mass_slack <= self.tol))
        ok_log = all(s >= -self.tol for s in self.log_slack.values())
        ok_sig = all(abs(r) <= self.tol for r in self.signal_residual.values())
        return ok_mass and ok_log and ok_sig

    def rows(self) -> list[list]:
        out = [
            [RELATION_MASS, "max", float(self.mass_slack.max()), self.tol,
             int(bool(np.all(self.mass_slack <= self.tol)))],
            [RELATION_MASS, "final", float(self.mass_slack[-1]), self.tol,
             int(self.mass_slack[-1] <= self.tol)],
        ]
        for name, s in self.log_slack.items():
            out.append([RELATION_LOG, name, float(s), self.tol, int(s >= -self.tol)])
        for name, r in self.signal_residual.items():
            out.append([RELATION_SIGNAL, name, float(r), self.tol, int(abs(r) <= self.tol)])
        return out

    def csv_text(self) -> str:
        return csv_text(WEAKCHECK_COLUMNS, self.rows())


def evaluate_trajectory(traj, tol: Optional[float] = None,
                        tests: Optional[list[TestFunction]] = None) -> WeakResiduals:
    """Run all three relation checks with the default catalogue and the
    config's discretization tolerance budget."""
    cfg = traj.config
    if tests is None:
        tests = catalogue_tests(traj.grid, traj.times[-1])
    if tol is None:
        dts = np.diff(np.asarray(traj.times))
        dt_max = float(dts.max()) if dts.size else 0.0
        vol = traj.grid.cell_volume
        scale = max(1.0, max(float(u.sum()) * vol for u in traj.u_snaps))
        tol = cfg.c_tol * (traj.grid.h_max + dt_max) * scale
    return WeakResiduals(
        times=np.asarray(traj.times),
        mass_slack=mass_subsolution_check(traj, tol),
        log_slack=log_supersolution_check(traj, tests, tol),
        signal_residual=v_weak_check(traj, tests, tol),
        tol=tol,
    )
