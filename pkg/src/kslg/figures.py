"""Matplotlib renderings of run, sweep and refinement reports, written next
to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_run_figures(outdir, report, traj) -> list[Path]:
    outdir = Path(outdir)
    paths = []

    fig, axes = plt.subplots(2, 3, figsize=(12, 6.5))
    t = report.t
    ax = axes[0, 0]
    ax.plot(t, report.mass_u, label="mass u")
    ax.plot(t, report.mass_v, label="mass v")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    ax.set_title("masses")

    ax = axes[0, 1]
    ax.plot(t, report.damping_cum, label="damping")
    if np.all(np.isfinite(report.lp_u_cum)):
        ax.plot(t, report.lp_u_cum, label="Lp(u) power")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    ax.set_title("cumulative integrals")

    ax = axes[0, 2]
    ax.plot(t, report.grad_v_sq_cum, label="|grad v|^2")
    ax.plot(t, report.log_dirichlet_cum, label="log-Dirichlet")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    ax.set_title("gradient budgets")

    ax = axes[1, 0]
    ax.plot(t, report.lr_v)
    ax.set_xlabel("t")
    ax.set_title("||v||_r")

    ax = axes[1, 1]
    ax.plot(t, report.entropy, label="entropy")
    ax.plot(t, report.mass_u, "--", label="mass u")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    ax.set_title("entropy vs mass")

    ax = axes[1, 2]
    resid = np.maximum(report.energy_residual, 1e-300)
    ax.semilogy(t[1:], resid[1:])
    ax.set_xlabel("t")
    ax.set_title("energy-identity residual")

    fig.tight_layout()
    path = outdir / "diagnostics.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)

    state = traj.final_state
    grid = traj.grid
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    if grid.dim == 1:
        x = grid.axis_centers(0)
        axes[0].plot(x, state.u.values)
        axes[1].plot(x, state.v.values)
        axes[0].set_xlabel("x")
        axes[1].set_xlabel("x")
    else:
        ext = grid.extent
        bounds = (-0.5 * ext[0], 0.5 * ext[0], -0.5 * ext[1], 0.5 * ext[1])
        for ax, vals in zip(axes, (state.u.values, state.v.values)):
            im = ax.imshow(vals.T, origin="lower", extent=bounds, aspect="auto")
            fig.colorbar(im, ax=ax)
    axes[0].set_title(f"u at t = {state.t:.4g}")
    axes[1].set_title(f"v at t = {state.t:.4g}")
    fig.tight_layout()
    path = outdir / "fields.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)
    return paths


def render_sweep_figure(outdir, report) -> Path:
    outdir = Path(outdir)
    ks = [r.k for r in report.rows[:-1]]
    grad = np.array([r.grad_v_diff_l2 for r in report.rows[:-1]])
    mixed = np.array([r.u_diff_mixed for r in report.rows[:-1]])
    fig, ax = plt.subplots(figsize=(6, 4))
    floor = 1e-300
    if ks:
        ax.semilogy(ks, np.maximum(grad, floor), "o-", label="grad v diff (L2)")
        ax.semilogy(ks, np.maximum(mixed, floor), "s-", label="u diff (mixed norm)")
    if report.onset is not None:
        ax.axvline(report.onset, color="gray", ls=":", label="truncation-inactive onset")
    ax.set_xlabel("schedule index k")
    ax.set_ylabel("pairwise difference")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = outdir / "sweep.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_refine_figure(outdir, result) -> Path:
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(6, 4))
    if result.l1_diffs and not result.exact:
        cells = np.array(result.cells[: len(result.l1_diffs)], dtype=float)
        diffs = np.array(result.l1_diffs)
        ax.loglog(1.0 / cells, diffs, "o-", label="L1 difference")
        ref = diffs[0] * (cells[0] / cells)
        ax.loglog(1.0 / cells, ref, "--", color="gray", label="first order")
        ax.legend(frameon=False)
    ax.set_xlabel("h (via 1/cells)")
    ax.set_ylabel("successive L1 difference")
    fig.tight_layout()
    path = outdir / "refine.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
