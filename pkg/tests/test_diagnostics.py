import math
from fractions import Fraction

import numpy as np
import pytest

from kslg.diagnostics import (
    check_grad_v_and_lq,
    check_lkappa_lp,
    check_log_dirichlet,
    check_mass_bounds,
    evaluate_report,
    lr_norm_bound,
    mu_negative_power_quadrature,
    solver_invariant_verdicts,
    verdicts_csv_text,
)
from kslg.exponents import ParamConfig, select_exponents
from kslg.solver import run

from conftest import make_config

F = Fraction


def admissible_exponents(n=2, s=F(2), kappa=F(2)):
    return select_exponents(ParamConfig(n, s, kappa))


@pytest.fixture(scope="module")
def steady_run():
    exps = admissible_exponents()
    cfg = make_config(T=0.5, s_exact=F(2), exponents=exps, kappa_exact=F(2))
    return cfg, *run(cfg)


@pytest.fixture(scope="module")
def random_run():
    exps = admissible_exponents(s=F(3, 2))
    cfg = make_config(cells=24, mu=("prototype", 1.0, 1.0),
                      u0=("random_smooth", 0.0, 2.0), v0=("random_smooth", 0.0, 1.0),
                      dt=("adaptive", 0.45, 2e-3), T=0.5, seed=21,
                      s_exact=F(3, 2), exponents=exps, kappa_exact=F(2))
    return cfg, *run(cfg)


def test_steady_state_mass_bounds(steady_run):
    cfg, traj, report = steady_run
    tol = report.tol(math.e)
    v1, v2, v3 = check_mass_bounds(report, report.lambda1, report.u0_mass,
                                   report.v0_mass, report.T, tol)
    assert v1.passed and v2.passed and v3.passed
    # unit-mean state on a volume-4 domain: mass 4 vs bound e^T (4+1)
    assert v1.value == pytest.approx(4.0)
    assert v1.margin > 1.0


def test_conservative_run_mass_bound():
    cfg = make_config(lam=0.0, mu=("constant", 0.0), u0=("random", 0.2, 2.0),
                      v0=("gaussian", 1.0, 0.4), seed=5, T=0.2)
    traj, report = run(cfg)
    v1, _, v3 = check_mass_bounds(report, 0.0, report.u0_mass, report.v0_mass,
                                  report.T, report.tol(report.u0_mass + 1))
    assert v1.passed
    # lam = mu = 0: sup mass equals the initial mass, damping is zero
    assert v1.value == pytest.approx(report.u0_mass, rel=1e-12)
    assert v3.value == 0.0


def test_random_run_all_bounds(random_run):
    cfg, traj, report = random_run
    verdicts = evaluate_report(report, cfg.coefficients.mu_vals)
    failed = [v for v in verdicts if not v.passed]
    assert not failed, [f"{v.check}: {v.value} vs {v.bound}" for v in failed]


def test_lkappa_lp_constant_symbolic():
    # constant mu = mu1 and stationary constant u on a unit-volume domain:
    # the bound reduces to T V^{k/p} u^k <= (mu1^{-s} V)^{(k-p)/p} mu1 u^k V T,
    # which is an equality (Hoelder is tight for constant fields)
    exps = admissible_exponents(s=F(2), kappa=F(2))  # p = 4/3
    cfg = make_config(extent=1.0, lam=3.0, mu=("constant", 2.0),
                      u0=("constant", 1.5), v0=("constant", 1.5), T=0.25,
                      s_exact=F(2), exponents=exps, kappa_exact=F(2))
    traj, report = run(cfg)
    verdict = check_lkappa_lp(report, exps, cfg.coefficients.mu_vals, tol=1e-12)
    T, ubar, mu1, V = report.T, 1.5, 2.0, 1.0
    p = float(exps.p)
    lhs = T * V ** (2.0 / p) * ubar**2
    rhs = (mu1**-2.0 * V) ** ((2.0 - p) / p) * mu1 * ubar**2 * V * T
    assert verdict.value == pytest.approx(lhs, rel=1e-9)
    assert verdict.bound == pytest.approx(rhs, rel=1e-9)
    assert verdict.passed


def test_lkappa_lp_zero_density():
    exps = admissible_exponents(s=F(2), kappa=F(2))
    cfg = make_config(u0=("constant", 0.0), v0=("constant", 1.0), T=0.1,
                      s_exact=F(2), exponents=exps, kappa_exact=F(2))
    traj, report = run(cfg)
    verdict = check_lkappa_lp(report, exps, cfg.coefficients.mu_vals, tol=1e-12)
    assert verdict.value == 0.0 and verdict.passed


def test_lkappa_lp_rejects_inconsistent_exponents(random_run):
    from dataclasses import replace

    cfg, traj, report = random_run
    bad = replace(admissible_exponents(s=F(5, 2)), s=F(7))
    with pytest.raises(ValueError):
        check_lkappa_lp(report, bad, cfg.coefficients.mu_vals, tol=0.0)


def test_energy_identity_steady(steady_run):
    cfg, traj, report = steady_run
    # stationary run: d/dt terms vanish and int int v^2 = int int u v exactly
    assert float(report.energy_residual[-1]) < 1e-10
    verdict = check_grad_v_and_lq(report, cfg.exponents, report.tol(1.0))
    assert verdict.passed


def test_energy_identity_pure_decay():
    cfg = make_config(dim=1, cells=32, lam=0.0, mu=("constant", 0.0),
                      u0=("constant", 0.0), v0=("cosine", 1.0, 0.5, 2),
                      dt=("fixed", 2e-3), T=0.2)
    traj, report = run(cfg)
    # u = 0: budget reduces to the decay of (1/2) int v^2; residual O(dt)
    assert float(report.energy_residual[-1]) < 5e-3 * float(report.half_v_sq[0])


def test_energy_residual_halves_with_dt():
    residuals = []
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = make_config(cells=16, u0=("gaussian", 2.0, 0.4),
                          v0=("gaussian", 1.0, 0.5), dt=("fixed", dt), T=0.25)
        _, report = run(cfg)
        residuals.append(float(report.energy_residual[-1]))
    for coarse, fine in zip(residuals, residuals[1:]):
        assert 1.5 <= coarse / fine <= 3.0


def test_log_dirichlet_constant_u(steady_run):
    cfg, traj, report = steady_run
    verdict = check_log_dirichlet(report, report.lambda1, report.T,
                                  report.volume, report.tol(1.0))
    assert verdict.passed
    assert verdict.value == pytest.approx(0.0, abs=1e-12)


def test_log_dirichlet_zero_density():
    cfg = make_config(u0=("constant", 0.0), v0=("constant", 1.0), T=0.1)
    traj, report = run(cfg)
    verdict = check_log_dirichlet(report, report.lambda1, report.T,
                                  report.volume, report.tol(1.0))
    assert verdict.passed
    assert verdict.bound >= report.lambda1 * report.T * report.volume


def test_lr_norm_steady_and_decay(steady_run):
    cfg, traj, report = steady_run
    verdict = lr_norm_bound(report, cfg.exponents.r, report.tol(1.0))
    assert verdict.passed
    # steady unit state: ||v||_r = V^(1/r)
    assert verdict.value == pytest.approx(report.volume ** (1.0 / float(cfg.exponents.r)))
    exps = admissible_exponents()
    cfg2 = make_config(u0=("constant", 0.0), v0=("gaussian", 1.0, 0.5), T=0.3,
                       s_exact=F(2), exponents=exps, kappa_exact=F(2))
    traj2, rep2 = run(cfg2)
    assert np.all(np.diff(rep2.lr_v) <= 1e-12)  # pure decay: nonincreasing
    assert lr_norm_bound(rep2, exps.r, rep2.tol(1.0)).passed


def test_lr_norm_no_late_growth_near_equilibrium():
    from kslg.diagnostics import lr_trend_growth

    # constant mu: the logistic equilibrium u = lam/mu is uniform and the
    # run is near-stationary over [T/2, T], so the trend is within budget
    exps = admissible_exponents(s=F(2))
    cfg = make_config(mu=("constant", 1.0), u0=("random_smooth", 0.5, 1.5),
                      v0=("random_smooth", 0.5, 1.5), seed=13, T=2.0,
                      dt=("adaptive", 0.45, 5e-3),
                      s_exact=F(2), exponents=exps, kappa_exact=F(2))
    traj, report = run(cfg)
    assert lr_trend_growth(report) <= report.tol(float(report.lr_v.max()))


def test_lr_norm_rejects_out_of_range(random_run):
    from dataclasses import replace

    cfg, traj, report = random_run
    es3 = select_exponents(ParamConfig(3, F(10), F(2)))
    rep3 = replace(report, exponents=es3)
    with pytest.raises(ValueError):
        lr_norm_bound(rep3, Fraction(10**9), report.tol(1.0))


def test_cumulative_series_nondecreasing(random_run):
    cfg, traj, report = random_run
    for name in ("damping_cum", "lp_u_cum", "grad_v_sq_cum",
                 "log_dirichlet_cum", "lambda_u_cum"):
        series = getattr(report, name)
        assert np.all(np.diff(series) >= -1e-15), name


def test_entropy_below_mass(random_run):
    cfg, traj, report = random_run
    assert np.all(report.entropy <= report.mass_u + 1e-12)


def test_solver_invariant_verdicts(random_run):
    cfg, traj, report = random_run
    for v in solver_invariant_verdicts(report):
        assert v.passed, v.check


def test_mu_negative_power_quadrature_excludes_zeros():
    from kslg.grid import Field, GridSpec

    g = GridSpec(1, (1.0,), (4,))
    mu = Field(g, np.array([0.0, 1.0, 4.0, 1.0]))
    quad = mu_negative_power_quadrature(g, mu.values, 1.0)
    assert quad == pytest.approx((1.0 + 0.25 + 1.0) * 0.25)
    assert math.isfinite(quad)


def test_verdict_margin_reproducible(random_run):
    cfg, traj, report = random_run
    v1 = evaluate_report(report, cfg.coefficients.mu_vals)
    cfg2 = make_config(cells=24, mu=("prototype", 1.0, 1.0),
                       u0=("random_smooth", 0.0, 2.0), v0=("random_smooth", 0.0, 1.0),
                       dt=("adaptive", 0.45, 2e-3), T=0.5, seed=21,
                       s_exact=F(3, 2), exponents=admissible_exponents(s=F(3, 2)),
                       kappa_exact=F(2))
    _, rep2 = run(cfg2)
    v2 = evaluate_report(rep2, cfg2.coefficients.mu_vals)
    assert verdicts_csv_text(v1) == verdicts_csv_text(v2)


def test_diagnostics_csv_shape(random_run):
    cfg, traj, report = random_run
    text = report.csv_text()
    lines = text.strip().split("\n")
    assert lines[0] == ("t,mass_u,mass_v,damping_cum,lp_u_cum,lr_v,"
                        "grad_v_sq_cum,log_dirichlet_cum,entropy,energy_residual")
    assert len(lines) == len(report.t) + 1
