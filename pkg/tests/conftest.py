"""Shared builders for solver-level tests."""

import numpy as np
import pytest

from kslg.grid import CoefficientField, Field, GridSpec, constant_field, sample_prototype_mu
from kslg.solver import DtPolicy, RunConfig, TruncationSpec


def make_config(
    dim=2,
    cells=16,
    extent=2.0,
    lam=1.0,
    mu=("constant", 1.0),
    kappa=2.0,
    epsilon=0.1,
    u0=("constant", 1.0),
    v0=("constant", 1.0),
    T=0.25,
    dt=("adaptive", 0.45, 1e-2),
    output_every=1,
    seed=0,
    s_exact=None,
    exponents=None,
    kappa_exact=None,
):
    grid = GridSpec(dim, (extent,) * dim, (cells,) * dim)
    lam_field = constant_field(grid, lam)
    if mu[0] == "constant":
        mu_field = constant_field(grid, mu[1])
    else:
        mu_field = sample_prototype_mu(grid, mu[1], mu[2])
    coeffs = CoefficientField(lam_field, mu_field)

    rng = np.random.default_rng(seed)

    def build(spec):
        kind = spec[0]
        if kind == "constant":
            return constant_field(grid, spec[1])
        if kind == "random":
            return Field(grid, rng.uniform(spec[1], spec[2], grid.shape))
        if kind == "random_smooth":
            lo, hi = spec[1], spec[2]
            mesh = grid.center_mesh()
            raw = np.zeros(grid.shape)
            for mx in range(3):
                for my in range(3 if grid.dim == 2 else 1):
                    amp = rng.normal()
                    term = np.full(grid.shape, amp)
                    for axis, m in enumerate((mx, my)[: grid.dim]):
                        x = mesh[axis] if grid.dim > 1 else mesh[0]
                        L = grid.extent[axis]
                        term = term * np.cos(m * np.pi * (x + 0.5 * L) / L)
                    raw = raw + term
            span = raw.max() - raw.min()
            if span == 0:
                return constant_field(grid, 0.5 * (lo + hi))
            return Field(grid, lo + (hi - lo) * (raw - raw.min()) / span)
        if kind == "gaussian":
            amp, width = spec[1], spec[2]
            r = grid.radius()
            return Field(grid, amp * np.exp(-(r**2) / (2 * width**2)))
        if kind == "cosine":
            offset, amp, modes = spec[1], spec[2], spec[3:]
            vals = np.full(grid.shape, 1.0)
            mesh = grid.center_mesh()
            for axis, m in enumerate(modes):
                x = mesh[axis] if grid.dim > 1 else mesh[0]
                L = grid.extent[axis]
                vals = vals * np.cos(m * np.pi * (x + 0.5 * L) / L)
            return Field(grid, offset + amp * vals)
        raise ValueError(kind)

    if dt[0] == "fixed":
        policy = DtPolicy("fixed", dt=dt[1])
    else:
        policy = DtPolicy("adaptive", cfl=dt[1], dt_max=dt[2])

    return RunConfig(
        grid=grid,
        coefficients=coeffs,
        kappa=kappa,
        trunc=TruncationSpec(epsilon),
        u0=build(u0),
        v0=build(v0),
        T=T,
        dt_policy=policy,
        output_every=output_every,
        seed=seed,
        s_exact=s_exact,
        exponents=exponents,
        kappa_exact=kappa_exact,
    )


@pytest.fixture(scope="session")
def steady_config():
    return make_config()
