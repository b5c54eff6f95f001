"""Continuation and refinement experiments around the solver.

``epsilon_sweep`` integrates the same configuration along a decreasing
truncation schedule and measures Cauchy behaviour of the fields between
consecutive runs; once a run never occupies the truncation band the
remaining runs are bit-identical and the differences vanish exactly.
``refinement_study`` estimates the observed convergence order under
simultaneous grid and step halving.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .exponents import mixed_norm_exponents
from .grid import grad_sq_values
from .ioutil import csv_text
from .solver import RunConfig, run

SWEEP_COLUMNS = ["k", "epsilon", "grad_v_diff_L2", "u_diff_mixed",
                 "trunc_inactive", "wallclock_s"]
REFINE_COLUMNS = ["level", "cells", "dt", "l1_diff", "observed_order"]


class StudyError(RuntimeError):
    pass


@dataclass
class SweepSpec:
    base: RunConfig
    epsilons: list[float]

    def __post_init__(self):
        eps = list(self.epsilons)
        if not eps:
            raise ValueError("empty epsilon schedule")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError("epsilons must lie in (0, 1]")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon schedule must be strictly decreasing")
        if self.base.dt_policy.kind != "fixed":
            raise ValueError("sweeps require a fixed dt policy so runs share a time grid")
        self.epsilons = eps

    @classmethod
    def geometric(cls, base: RunConfig, levels: int) -> "SweepSpec":
        eps0 = base.trunc.epsilon
        return cls(base, [eps0 * 0.5**k for k in range(levels + 1)])


@dataclass
class SweepRow:
    k: int
    epsilon: float
    grad_v_diff_l2: float  # difference to the next schedule entry (nan for the last)
    u_diff_mixed: float
    trunc_inactive: bool
    wallclock_s: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    onset: Optional[int]
    monotone_before_onset: bool

    def csv_text(self) -> str:
        rows = [
            [r.k, float(r.epsilon), float(r.grad_v_diff_l2), float(r.u_diff_mixed),
             int(r.trunc_inactive), float(r.wallclock_s)]
            for r in self.rows
        ]
        return csv_text(SWEEP_COLUMNS, rows)


def _worker_count(max_workers: Optional[int]) -> int:
    if max_workers is not None:
        return max(1, max_workers)
    env = os.environ.get("KSLG_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros_like(times)
    w[:-1] += 0.5 * np.diff(times)
    w[1:] += 0.5 * np.diff(times)
    return w


def epsilon_sweep(spec: SweepSpec, max_workers: Optional[int] = None) -> SweepReport:
    """Run the schedule (concurrently; results merged in schedule order) and
    record pairwise space-time differences between consecutive runs."""
    base = spec.base
    if base.exponents is None:
        raise ValueError("sweeps need the run's exponent set for the mixed norm")

    def job(eps: float):
        t0 = time.perf_counter()
        traj, report = run(base.with_epsilon(eps))
        return traj, report, time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=_worker_count(max_workers)) as pool:
        results = list(pool.map(job, spec.epsilons))

    times0 = results[0][0].times
    for traj, _, _ in results[1:]:
        if traj.times != times0:
            raise StudyError("sweep runs diverged onto different time grids")
    t = np.asarray(times0)
    w = _trapezoid_weights(t)
    grid = base.grid
    vol = grid.cell_volume
    p_t, k_t = (float(x) for x in mixed_norm_exponents(base.exponents))

    rows = []
    for k, eps in enumerate(spec.epsilons):
        traj, report, wall = results[k]
        inactive = bool(float(report.max_u.max()) <= 1.0 / eps)
        grad_diff = math.nan
        mixed = math.nan
        if k + 1 < len(results):
            traj2 = results[k + 1][0]
            gsq = sum(
                w[i] * grad_sq_values(grid, traj.v_snaps[i] - traj2.v_snaps[i])
                for i in range(len(times0))
            )
            grad_diff = math.sqrt(gsq)
            space = np.array([
                (np.abs(traj.u_snaps[i] - traj2.u_snaps[i]) ** p_t).sum() * vol
                for i in range(len(times0))
            ])
            mixed = float(np.sum(w * space ** (k_t / p_t))) ** (1.0 / k_t)
        rows.append(SweepRow(k, eps, grad_diff, mixed, inactive, wall))

    onset = next((r.k for r in rows if r.trunc_inactive), None)
    monotone = True
    if onset is not None and onset >= 2:
        active = [rows[i].grad_v_diff_l2 for i in range(onset)]
        monotone = all(a >= b for a, b in zip(active, active[1:]))
    return SweepReport(rows=rows, onset=onset, monotone_before_onset=monotone)


@dataclass
class RefinementResult:
    cells: list[int]
    dts: list[float]
    l1_diffs: list[float]
    orders: list[float]
    exact: bool

    @property
    def observed_order(self) -> float:
        return self.orders[-1] if self.orders else math.inf

    def csv_text(self) -> str:
        rows = []
        for lvl in range(len(self.cells)):
            diff = self.l1_diffs[lvl] if lvl < len(self.l1_diffs) else math.nan
            order = self.orders[lvl - 1] if 0 < lvl <= len(self.orders) else math.nan
            rows.append([lvl, self.cells[lvl], float(self.dts[lvl]), float(diff),
                         float(order)])
        return csv_text(REFINE_COLUMNS, rows)


def _coarsen(values: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return values.reshape(-1, 2).mean(axis=1)
    nx, ny = values.shape
    return values.reshape(nx // 2, 2, ny // 2, 2).mean(axis=(1, 3))


def default_rebuild(cfg: RunConfig) -> Callable[[int], RunConfig]:
    """Level builder for configs whose initial data and coefficients are
    resolution-independent closed forms captured in ``cfg.recipe``."""
    if cfg.recipe is None:
        raise StudyError(
            "refinement needs a resolution-independent config recipe; "
            "build the RunConfig through the config module or pass rebuild="
        )
    return cfg.recipe


def refinement_study(cfg: RunConfig, levels: int,
                     rebuild: Optional[Callable[[int], RunConfig]] = None) -> RefinementResult:
    """Halve h and dt per level and estimate the observed L1 order of the
    density at the final time.  Raises on non-monotone differences
    (under-resolved regime) and on observed order below 0.8."""
    if levels < 3:
        raise ValueError("refinement needs at least 3 levels")
    if cfg.dt_policy.kind != "fixed":
        raise ValueError("refinement requires a fixed dt policy")
    if rebuild is None:
        rebuild = default_rebuild(cfg)

    cfgs = [rebuild(j) for j in range(levels)]
    finals = []
    for j, c in enumerate(cfgs):
        expected = tuple(n * 2**j for n in cfg.grid.cells)
        if c.grid.cells != expected or c.dt_policy.dt != cfg.dt_policy.dt / 2**j:
            raise StudyError(f"rebuild produced wrong resolution at level {j}")
        traj, _ = run(c)
        finals.append(traj.u_snaps[-1])

    diffs = []
    for j in range(levels - 1):
        restricted = finals[j + 1]
        for _ in range(1):
            restricted = _coarsen(restricted, cfg.grid.dim)
        vol = cfgs[j].grid.cell_volume
        diffs.append(float(np.abs(restricted - finals[j]).sum()) * vol)

    scale = max(float(np.abs(f).max()) for f in finals) or 1.0
    floor = 1e-12 * scale
    if all(d <= floor for d in diffs):
        return RefinementResult(
            cells=[c.grid.cells[0] for c in cfgs],
            dts=[c.dt_policy.dt for c in cfgs],
            l1_diffs=diffs, orders=[], exact=True,
        )
    for a, b in zip(diffs, diffs[1:]):
        if b >= a:
            raise StudyError(f"non-monotone refinement differences {diffs}: under-resolved")
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    if orders and orders[-1] < 0.8:
        raise StudyError(f"observed order {orders[-1]:.3f} below 0.8")
    return RefinementResult(
        cells=[c.grid.cells[0] for c in cfgs],
        dts=[c.dt_policy.dt for c in cfgs],
        l1_diffs=diffs, orders=orders, exact=False,
    )
