"""Trajectory functionals and inequality verdicts.

Every cumulative space-time integral is accumulated with the trapezoidal
rule on the step grid, matching the first-order accuracy of the scheme.
Checks compare against the closed-form bounds implied by the model's growth
and damping structure, with a discretization budget tol = c_tol (h + dt)
times the scale of each bound's right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .exponents import ExponentSet, r_admissible_range
from .grid import Field, GridSpec, grad_sq_values, integrate_values
from .ioutil import atomic_write_text, csv_text

DIAGNOSTICS_COLUMNS = [
    "t", "mass_u", "mass_v", "damping_cum", "lp_u_cum", "lr_v",
    "grad_v_sq_cum", "log_dirichlet_cum", "entropy", "energy_residual",
]

VERDICT_COLUMNS = ["check", "bound", "value", "margin", "pass"]


@dataclass
class Verdict:
    check: str
    bound: float
    value: float
    passed: bool
    note: str = ""

    @property
    def margin(self) -> float:
        return self.bound - self.value

    def row(self) -> list:
        return [self.check, float(self.bound), float(self.value),
                float(self.margin), int(self.passed)]


@dataclass
class DiagnosticsReport:
    """Per-step time series of every tracked functional plus run metadata.

    Cumulative columns integrate from 0 to t[k]; instantaneous columns are
    sampled at t[k].  ``lp_u_cum`` and ``lq_v_cum`` are NaN when the run has
    no exponent set.
    """

    t: np.ndarray
    mass_u: np.ndarray
    mass_v: np.ndarray
    damping_cum: np.ndarray
    lp_u_cum: np.ndarray
    lq_v_cum: np.ndarray
    lr_v: np.ndarray
    grad_v_sq_cum: np.ndarray
    log_dirichlet_cum: np.ndarray
    entropy: np.ndarray
    energy_residual: np.ndarray
    uv_cum: np.ndarray
    v_sq_cum: np.ndarray
    half_v_sq: np.ndarray
    lambda_u_cum: np.ndarray
    damping_relaxed_cum: np.ndarray
    mass_identity_err: np.ndarray  # one entry per step
    dt_steps: np.ndarray
    min_u: np.ndarray
    min_v: np.ndarray
    max_u: np.ndarray
    # metadata
    lambda1: float
    volume: float
    h_max: float
    u0_mass: float
    v0_mass: float
    c_tol: float
    kappa: float
    exponents: Optional[ExponentSet]
    s_exact: Optional[Fraction]
    mu_neg_s_quad: Optional[float]
    completed: bool
    blowup_time: Optional[float]

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def dt_max_used(self) -> float:
        return float(self.dt_steps.max()) if self.dt_steps.size else 0.0

    def tol(self, scale: float) -> float:
        """Discretization budget c_tol * (h + dt) * scale."""
        return self.c_tol * (self.h_max + self.dt_max_used) * abs(scale)

    def csv_text(self, every: int = 1) -> str:
        idx = list(range(0, len(self.t), every))
        if idx[-1] != len(self.t) - 1:
            idx.append(len(self.t) - 1)
        rows = [
            [float(self.t[k]), float(self.mass_u[k]), float(self.mass_v[k]),
             float(self.damping_cum[k]), float(self.lp_u_cum[k]), float(self.lr_v[k]),
             float(self.grad_v_sq_cum[k]), float(self.log_dirichlet_cum[k]),
             float(self.entropy[k]), float(self.energy_residual[k])]
            for k in idx
        ]
        return csv_text(DIAGNOSTICS_COLUMNS, rows)


class DiagnosticsAccumulator:
    """Accumulates the report during a run; one `after_step` call per step."""

    def __init__(self, cfg, state0):
        self.cfg = cfg
        self.grid: GridSpec = cfg.grid
        exps = cfg.exponents
        self._p = float(exps.p) if exps else math.nan
        self._kp = float(exps.kappa / exps.p) if exps else math.nan
        self._q = float(exps.q) if exps else math.nan
        self._gq = float(exps.gamma / exps.q) if exps else math.nan
        self._r = float(exps.r) if exps else 2.0
        self._kappa = cfg.kappa
        self._lam = cfg.coefficients.lambda_vals.values
        self._mu = cfg.coefficients.mu_vals.values
        self.mu_neg_s_quad = None
        if cfg.s_exact is not None:
            self.mu_neg_s_quad = mu_negative_power_quadrature(
                self.grid, self._mu, float(cfg.s_exact))
        first = self._instant(state0.u.values, state0.v.values)
        self._series = {k: [val] for k, val in first.items()}
        self._prev = first
        self._cum = {k: [0.0] for k in (
            "damping", "lp", "lq", "grad_v", "logdir", "uv", "vsq", "lam_u",
            "damping_relaxed")}
        self._t = [0.0]
        self._dt = []
        self._mass_err = []
        self._energy_res = [0.0]

    def _instant(self, u, v):
        grid = self.grid
        ln1p = np.log1p(u)
        out = {
            "mass_u": integrate_values(grid, u),
            "mass_v": integrate_values(grid, v),
            "damping": integrate_values(grid, self._mu * u ** self._kappa),
            "lr": integrate_values(grid, v ** self._r) ** (1.0 / self._r),
            "grad_v": grad_sq_values(grid, v),
            "logdir": grad_sq_values(grid, ln1p),
            "entropy": integrate_values(grid, ln1p),
            "uv": integrate_values(grid, u * v),
            "vsq": integrate_values(grid, v * v),
            "lam_u": integrate_values(grid, self._lam * u),
            "damping_relaxed": integrate_values(grid, self._mu * u ** self._kappa / (u + 1.0)),
            "min_u": float(u.min()),
            "min_v": float(v.min()),
            "max_u": float(u.max()),
        }
        if math.isnan(self._p):
            out["lp"] = math.nan
            out["lq"] = math.nan
        else:
            out["lp"] = integrate_values(grid, u ** self._p) ** self._kp
            out["lq"] = integrate_values(grid, v ** self._q) ** self._gq
        return out

    def after_step(self, state, info) -> None:
        cur = self._instant(state.u.values, state.v.values)
        dt = info.dt
        self._t.append(state.t)
        self._dt.append(dt)
        for key in self._cum:
            inc = 0.5 * dt * (self._prev[key] + cur[key])
            self._cum[key].append(self._cum[key][-1] + inc)
        for key, val in cur.items():
            self._series[key].append(val)
        dm = cur["mass_u"] - self._prev["mass_u"]
        self._mass_err.append(abs(dm - dt * (info.growth_integral - info.damping_integral)))
        half0 = 0.5 * self._series["vsq"][0]
        res = (0.5 * cur["vsq"] + self._cum["grad_v"][-1] + self._cum["vsq"][-1]
               - half0 - self._cum["uv"][-1])
        self._energy_res.append(abs(res))
        self._prev = cur

    def finish(self, completed: bool = True, blowup_time=None) -> DiagnosticsReport:
        arr = lambda key: np.asarray(self._series[key], dtype=float)
        cum = lambda key: np.asarray(self._cum[key], dtype=float)
        cfg = self.cfg
        return DiagnosticsReport(
            t=np.asarray(self._t), mass_u=arr("mass_u"), mass_v=arr("mass_v"),
            damping_cum=cum("damping"), lp_u_cum=cum("lp"), lq_v_cum=cum("lq"),
            lr_v=arr("lr"), grad_v_sq_cum=cum("grad_v"),
            log_dirichlet_cum=cum("logdir"), entropy=arr("entropy"),
            energy_residual=np.asarray(self._energy_res),
            uv_cum=cum("uv"), v_sq_cum=cum("vsq"),
            half_v_sq=0.5 * arr("vsq"), lambda_u_cum=cum("lam_u"),
            damping_relaxed_cum=cum("damping_relaxed"),
            mass_identity_err=np.asarray(self._mass_err),
            dt_steps=np.asarray(self._dt),
            min_u=arr("min_u"), min_v=arr("min_v"), max_u=arr("max_u"),
            lambda1=cfg.coefficients.lambda_sup, volume=self.grid.volume,
            h_max=self.grid.h_max,
            u0_mass=float(self._series["mass_u"][0]),
            v0_mass=float(self._series["mass_v"][0]),
            c_tol=cfg.c_tol, kappa=cfg.kappa, exponents=cfg.exponents,
            s_exact=cfg.s_exact, mu_neg_s_quad=self.mu_neg_s_quad,
            completed=completed, blowup_time=blowup_time,
        )


def mu_negative_power_quadrature(grid: GridSpec, mu: np.ndarray, s: float) -> float:
    """Discrete integral of mu^{-s}, excluding cells where mu vanishes
    exactly (possible only when a cell center sits at the origin; the
    default origin-centered even grids never do)."""
    mask = mu > 0.0
    if not mask.any():
        return math.inf
    return float(np.sum(mu[mask] ** (-s))) * grid.cell_volume


# -- inequality checks --------------------------------------------------------

def check_mass_bounds(report: DiagnosticsReport, lambda1: float, u0_mass: float,
                      v0_mass: float, T: float, tol: float) -> tuple[Verdict, Verdict, Verdict]:
    """Sup bounds on both masses and on the cumulative damping integral."""
    growth = math.exp(lambda1 * T) * (u0_mass + 1.0)
    b_u = growth
    b_v = v0_mass + 1.0 + growth
    b_d = growth
    v_u = float(report.mass_u.max())
    v_v = float(report.mass_v.max())
    v_d = float(report.damping_cum[-1])
    return (
        Verdict("mass_u_sup", b_u + tol, v_u, v_u <= b_u + tol),
        Verdict("mass_v_sup", b_v + tol, v_v, v_v <= b_v + tol),
        Verdict("damping_total", b_d + tol, v_d, v_d <= b_d + tol),
    )


def check_lkappa_lp(report: DiagnosticsReport, exponents: ExponentSet,
                    mu_field: Field, tol: float) -> Verdict:
    """Cumulative (int u^p)^(kappa/p) against the weighted damping integral.

    The comparison constant is (int mu^{-s})^{(kappa-p)/p}, the discrete
    Hoelder constant; the identity p/(kappa-p) = s is verified exactly first.
    """
    p, kappa, s = exponents.p, exponents.kappa, exponents.s
    if p / (kappa - p) != s:
        raise ValueError(f"exponent inconsistency: p/(kappa-p) = {p / (kappa - p)} != s = {s}")
    quad = mu_negative_power_quadrature(mu_field.grid, mu_field.values, float(s))
    if not math.isfinite(quad):
        raise ValueError("discrete integral of mu^{-s} is not finite")
    c2 = quad ** float((kappa - p) / p)
    bound = c2 * float(report.damping_cum[-1])
    value = float(report.lp_u_cum[-1])
    return Verdict("lkappa_lp", bound + tol, value, value <= bound + tol,
                   note=f"c2={c2:.6g}")


def check_grad_v_and_lq(report: DiagnosticsReport, exponents: ExponentSet,
                        tol: float) -> Verdict:
    """Integrated signal-energy budget
        1/2 int v^2(T) + int int |grad v|^2 + int int v^2
            <= 1/2 int v0^2 + int int u v + tol,
    with the companion space-time norms of u and v reported as finite."""
    value = float(report.half_v_sq[-1] + report.grad_v_sq_cum[-1] + report.v_sq_cum[-1])
    bound = float(report.half_v_sq[0] + report.uv_cum[-1])
    pieces = (float(report.lp_u_cum[-1]), float(report.lq_v_cum[-1]),
              float(report.grad_v_sq_cum[-1]))
    finite = all(math.isfinite(x) for x in pieces)
    passed = finite and value <= bound + tol
    return Verdict(
        "grad_v_energy", bound + tol, value, passed,
        note=f"lp_u={pieces[0]:.6g} lq_v={pieces[1]:.6g} grad_v={pieces[2]:.6g}",
    )


def check_log_dirichlet(report: DiagnosticsReport, lambda1: float, T: float,
                        domain_volume: float, tol: float) -> Verdict:
    """Half the log-Dirichlet integral against the signal-gradient, final
    mass, growth-volume and relaxed-damping budget."""
    value = 0.5 * float(report.log_dirichlet_cum[-1])
    bound = (0.5 * float(report.grad_v_sq_cum[-1]) + float(report.mass_u[-1])
             + lambda1 * T * domain_volume + float(report.damping_relaxed_cum[-1]))
    return Verdict("log_dirichlet", bound + tol, value, value <= bound + tol)


def lr_trend_growth(report: DiagnosticsReport) -> float:
    """Regression slope of ||v||_{L^r} over [T/2, T], times that half
    window: the norm growth a linear trend would predict."""
    t = report.t
    half = t >= 0.5 * t[-1]
    tt, yy = t[half], report.lr_v[half]
    if tt.size < 2 or float(np.ptp(tt)) == 0:
        return 0.0
    slope = float(np.polyfit(tt, yy, 1)[0])
    return slope * 0.5 * float(t[-1])


def lr_norm_bound(report: DiagnosticsReport, r: Fraction, tol: float) -> Verdict:
    """Boundedness recording for sup_t ||v||_{L^r}: the constant behind this
    bound is nonconstructive, so the verdict asserts finiteness and records
    the sup together with the late-time growth trend."""
    exps = report.exponents
    if exps is None:
        raise ValueError("lr_norm_bound requires the run's exponent set")
    rng = r_admissible_range(exps.n, exps.p, exps.kappa)
    if not rng.contains(Fraction(r)):
        raise ValueError(f"r = {r} outside the admissible range {rng}")
    sup = float(report.lr_v.max())
    return Verdict("lr_v_bounded", sup + tol, sup, math.isfinite(sup),
                   note=f"trend_growth={lr_trend_growth(report):.3e}")


def solver_invariant_verdicts(report: DiagnosticsReport) -> list[Verdict]:
    mass_scale = max(1.0, float(report.mass_u.max()))
    err = float(report.mass_identity_err.max()) if report.mass_identity_err.size else 0.0
    out = [
        Verdict("mass_identity", 1e-9 * mass_scale, err, err <= 1e-9 * mass_scale),
        Verdict("positivity_u", 0.0, -float(report.min_u.min()),
                float(report.min_u.min()) >= 0.0),
        Verdict("positivity_v", 0.0, -float(report.min_v.min()),
                float(report.min_v.min()) >= 0.0),
    ]
    ent_excess = float((report.entropy - report.mass_u).max())
    ent_tol = 1e-12 * mass_scale
    out.append(Verdict("entropy_le_mass", ent_tol, ent_excess, ent_excess <= ent_tol))
    return out


def evaluate_report(report: DiagnosticsReport, mu_field: Field) -> list[Verdict]:
    """All applicable verdicts for one completed run, with the tolerance of
    each inequality budgeted from the scale of its own right-hand side."""
    lam1, T = report.lambda1, report.T
    growth = math.exp(lam1 * T) * (report.u0_mass + 1.0)
    verdicts = list(check_mass_bounds(
        report, lam1, report.u0_mass, report.v0_mass, T,
        report.tol(report.v0_mass + 1.0 + growth)))
    verdicts += solver_invariant_verdicts(report)
    if report.exponents is not None and report.mu_neg_s_quad is not None \
            and math.isfinite(report.mu_neg_s_quad):
        exps = report.exponents
        c2 = report.mu_neg_s_quad ** float((exps.kappa - exps.p) / exps.p)
        scale = max(1.0, c2 * float(report.damping_cum[-1]))
        verdicts.append(check_lkappa_lp(report, exps, mu_field, report.tol(scale)))
        scale = max(1.0, float(report.half_v_sq[0] + report.uv_cum[-1]))
        verdicts.append(check_grad_v_and_lq(report, exps, report.tol(scale)))
        verdicts.append(lr_norm_bound(
            report, exps.r, report.tol(max(1.0, float(report.lr_v.max())))))
    logdir_scale = max(
        1.0, 0.5 * float(report.grad_v_sq_cum[-1]) + float(report.mass_u[-1])
        + lam1 * T * report.volume + float(report.damping_relaxed_cum[-1]))
    verdicts.append(check_log_dirichlet(
        report, lam1, T, report.volume, report.tol(logdir_scale)))
    return verdicts


def verdicts_csv_text(verdicts: list[Verdict]) -> str:
    return csv_text(VERDICT_COLUMNS, [v.row() for v in verdicts])


def write_reports(outdir, report: DiagnosticsReport, verdicts: list[Verdict],
                  every: int = 1) -> None:
    from pathlib import Path

    outdir = Path(outdir)
    atomic_write_text(outdir / "diagnostics.csv", report.csv_text(every))
    atomic_write_text(outdir / "verdicts.csv", verdicts_csv_text(verdicts))
