"""Human-readable run configuration files.

INI-style sections with `key = value` lines; `#` starts a comment.  Every
physical quantity (dimension, kappa, epsilon, T, coefficients, initial data)
must be stated explicitly.  Validation collects every problem, not just the
first, and reports unknown keys with a nearest-known suggestion.

    [grid]
    dim = 2
    cells = 64 64
    extent = 2.0 2.0

    [model]
    kappa = 2            # rationals as a/b or decimal strings, parsed exactly
    epsilon = 0.1
    s = 3/2              # optional: enables the exponent-dependent checks

    [coefficients]
    lambda = constant 1.0
    mu = prototype 1.0 1.0     # mu1, alpha;  or: constant 1.0

    [initial]
    u0 = gaussian 2.0 0.45     # constant c | gaussian amp width |
    v0 = gaussian 1.0 0.55     # cosine offset amp mx [my] | random lo hi |
                               # random_smooth lo hi

    [time]
    T = 1.0
    dt = adaptive 0.45 0.0078125    # or: fixed 0.004
    output_every = 1

    [tolerances]
    c_tol = 0.1
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .exponents import (
    ParamConfig,
    kappa_threshold,
    mu_integrability_exponent_bound,
    select_exponents,
)
from .grid import CoefficientField, Field, GridSpec, constant_field, sample_prototype_mu
from .solver import DtPolicy, RunConfig, TruncationSpec

_SCHEMA: dict[str, dict[str, bool]] = {
    # section -> {key: required}
    "grid": {"dim": True, "cells": True, "extent": True},
    "model": {"kappa": True, "epsilon": True, "s": False},
    "coefficients": {"lambda": True, "mu": True},
    "initial": {"u0": True, "v0": True},
    "time": {"T": True, "dt": True, "output_every": False},
    "tolerances": {"c_tol": False},
}
_REQUIRED_SECTIONS = ("grid", "model", "coefficients", "initial", "time")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))


@dataclass
class ConfigDoc:
    """Parsed and validated configuration; ``build`` instantiates the run."""

    path: str
    dim: int
    cells: tuple[int, ...]
    extent: tuple[float, ...]
    kappa: Fraction
    epsilon: Fraction
    s: Optional[Fraction]
    lambda_spec: tuple
    mu_spec: tuple
    u0_spec: tuple
    v0_spec: tuple
    T: float
    dt_spec: tuple
    output_every: int = 1
    c_tol: float = 0.1
    text: str = ""

    def grid_at(self, factor: int = 1) -> GridSpec:
        return GridSpec(self.dim, self.extent, tuple(c * factor for c in self.cells))

    def build(self, seed: int = 0) -> RunConfig:
        return _build_level(self, seed, 0)


def _build_level(doc: ConfigDoc, seed: int, level: int) -> RunConfig:
    grid = doc.grid_at(2**level)
    lam = Field(grid, _sample_family(grid, doc.lambda_spec, None))
    if doc.mu_spec[0] == "prototype":
        mu = sample_prototype_mu(grid, doc.mu_spec[1], float(doc.mu_spec[2]))
    else:
        mu = constant_field(grid, doc.mu_spec[1])
    rng = np.random.default_rng(seed)  # u0 drawn before v0, always
    u0 = Field(grid, np.maximum(_sample_family(grid, doc.u0_spec, rng), 0.0))
    v0 = Field(grid, np.maximum(_sample_family(grid, doc.v0_spec, rng), 0.0))

    if doc.dt_spec[0] == "fixed":
        policy = DtPolicy("fixed", dt=doc.dt_spec[1] / 2**level)
    else:
        policy = DtPolicy("adaptive", cfl=doc.dt_spec[1], dt_max=doc.dt_spec[2] / 2**level)

    exponents = None
    if doc.s is not None:
        n = max(doc.dim, 2)
        exponents = select_exponents(ParamConfig(n, doc.s, doc.kappa))

    cfg = RunConfig(
        grid=grid,
        coefficients=CoefficientField(lam, mu),
        kappa=float(doc.kappa),
        trunc=TruncationSpec(float(doc.epsilon)),
        u0=u0, v0=v0,
        T=doc.T,
        dt_policy=policy,
        output_every=doc.output_every,
        c_tol=doc.c_tol,
        kappa_exact=doc.kappa,
        s_exact=doc.s,
        exponents=exponents,
        seed=seed,
        recipe=lambda lvl: _build_level(doc, seed, lvl),
    )
    return cfg


def _sample_family(grid: GridSpec, spec: tuple, rng) -> np.ndarray:
    kind = spec[0]
    if kind == "constant":
        return np.full(grid.shape, spec[1])
    if kind == "gaussian":
        amp, width = spec[1], spec[2]
        return amp * np.exp(-(grid.radius() ** 2) / (2.0 * width**2))
    if kind == "cosine":
        offset, amp, modes = spec[1], spec[2], spec[3]
        vals = np.full(grid.shape, 1.0)
        mesh = grid.center_mesh()
        for axis, m in enumerate(modes):
            x = mesh[axis] if grid.dim > 1 else mesh[0]
            L = grid.extent[axis]
            vals = vals * np.cos(m * np.pi * (x + 0.5 * L) / L)
        return offset + amp * vals
    if kind == "random":
        return rng.uniform(spec[1], spec[2], grid.shape)
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
            return np.full(grid.shape, 0.5 * (lo + hi))
        return lo + (hi - lo) * (raw - raw.min()) / span
    raise AssertionError(kind)


# -- parsing -------------------------------------------------------------------

def _rational(text: str) -> Fraction:
    return Fraction(text)


def parse_config(path) -> ConfigDoc:
    """Parse and fully validate a config file; raises ConfigError carrying
    every problem found (section/key path and line number per entry)."""
    path = Path(path)
    text = path.read_text()
    errors: list[str] = []
    entries: dict[str, dict[str, tuple[str, int]]] = {}
    section = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                hint = difflib.get_close_matches(section, _SCHEMA, n=1)
                extra = f" (did you mean [{hint[0]}]?)" if hint else ""
                errors.append(f"line {lineno}: unknown section [{section}]{extra}")
                section = None
            else:
                entries.setdefault(section, {})
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        if section is None:
            errors.append(f"line {lineno}: key outside any known section")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        known = _SCHEMA[section]
        if key not in known:
            hint = difflib.get_close_matches(key, known, n=1)
            extra = f" (did you mean {hint[0]!r}?)" if hint else ""
            errors.append(f"line {lineno}: [{section}] unknown key {key!r}{extra}")
            continue
        if key in entries[section]:
            errors.append(f"line {lineno}: [{section}] duplicate key {key!r}")
            continue
        entries[section][key] = (value, lineno)

    for sec in _REQUIRED_SECTIONS:
        if sec not in entries:
            errors.append(f"missing section [{sec}]")
    for sec, keys in _SCHEMA.items():
        if sec not in entries:
            continue
        for key, required in keys.items():
            if required and key not in entries[sec]:
                errors.append(f"[{sec}] missing required key {key!r}")

    if errors:
        raise ConfigError(errors)

    def get(sec, key, default=None):
        return entries.get(sec, {}).get(key, (default, 0))

    def fail(sec, key, lineno, msg):
        errors.append(f"line {lineno}: [{sec}] {key}: {msg}")

    # grid
    dim = cells = extent = None
    value, ln = get("grid", "dim")
    try:
        dim = int(value)
        if dim not in (1, 2):
            fail("grid", "dim", ln, "must be 1 or 2")
    except ValueError:
        fail("grid", "dim", ln, f"not an integer: {value!r}")
    value, ln = get("grid", "cells")
    try:
        cells = tuple(int(tok) for tok in value.split())
        if any(c < 4 for c in cells):
            fail("grid", "cells", ln, "needs at least 4 cells per axis")
    except ValueError:
        fail("grid", "cells", ln, f"not integers: {value!r}")
    value, ln = get("grid", "extent")
    try:
        extent = tuple(float(tok) for tok in value.split())
        if any(e <= 0 for e in extent):
            fail("grid", "extent", ln, "extents must be positive")
    except ValueError:
        fail("grid", "extent", ln, f"not numbers: {value!r}")
    if dim is not None and cells is not None and len(cells) != dim:
        fail("grid", "cells", get("grid", "cells")[1], f"expected {dim} entries")
    if dim is not None and extent is not None and len(extent) != dim:
        fail("grid", "extent", get("grid", "extent")[1], f"expected {dim} entries")

    # model
    kappa = epsilon = s = None
    value, ln = get("model", "kappa")
    try:
        kappa = _rational(value)
        if kappa <= 1:
            fail("model", "kappa", ln, f"kappa = {kappa} violates kappa > 1")
    except ValueError:
        fail("model", "kappa", ln, f"not a rational: {value!r}")
    value, ln = get("model", "epsilon")
    try:
        epsilon = _rational(value)
        if not 0 < epsilon <= 1:
            fail("model", "epsilon", ln, f"epsilon = {epsilon} outside (0, 1]")
    except ValueError:
        fail("model", "epsilon", ln, f"not a rational: {value!r}")
    if "s" in entries.get("model", {}):
        value, ln = get("model", "s")
        try:
            s = _rational(value)
            if s <= 0:
                fail("model", "s", ln, "s must be positive")
        except ValueError:
            fail("model", "s", ln, f"not a rational: {value!r}")

    # coefficients
    lambda_spec = mu_spec = None
    value, ln = get("coefficients", "lambda")
    lambda_spec = _parse_lambda(value, lambda m: fail("coefficients", "lambda", ln, m))
    value, ln = get("coefficients", "mu")
    mu_spec = _parse_mu(value, lambda m: fail("coefficients", "mu", ln, m))

    # initial
    value, ln = get("initial", "u0")
    u0_spec = _parse_initial(value, lambda m: fail("initial", "u0", ln, m))
    value, ln = get("initial", "v0")
    v0_spec = _parse_initial(value, lambda m: fail("initial", "v0", ln, m))

    # time
    T = None
    value, ln = get("time", "T")
    try:
        T = float(value)
        if T <= 0:
            fail("time", "T", ln, "T must be positive")
    except ValueError:
        fail("time", "T", ln, f"not a number: {value!r}")
    value, ln = get("time", "dt")
    dt_spec = _parse_dt(value, lambda m: fail("time", "dt", ln, m))
    output_every = 1
    if "output_every" in entries.get("time", {}):
        value, ln = get("time", "output_every")
        try:
            output_every = int(value)
            if output_every < 1:
                fail("time", "output_every", ln, "must be >= 1")
        except ValueError:
            fail("time", "output_every", ln, f"not an integer: {value!r}")
    c_tol = 0.1
    if "c_tol" in entries.get("tolerances", {}):
        value, ln = get("tolerances", "c_tol")
        try:
            c_tol = float(value)
            if c_tol <= 0:
                fail("tolerances", "c_tol", ln, "must be positive")
        except ValueError:
            fail("tolerances", "c_tol", ln, f"not a number: {value!r}")

    # cross-field admissibility when s is requested
    if not errors and s is not None:
        n = max(dim, 2)
        thr = kappa_threshold(ParamConfig(n, s, kappa))
        if kappa <= thr:
            errors.append(
                f"[model] s: kappa = {kappa} is not admissible for n = {n}, s = {s} "
                f"(needs kappa > {thr})"
            )
        if mu_spec is not None and mu_spec[0] == "prototype":
            alpha = mu_spec[2]
            s_sup = mu_integrability_exponent_bound(n, alpha)
            if not isinstance(s_sup, float) and s >= s_sup:
                errors.append(
                    f"[model] s: s = {s} violates the integrability bound "
                    f"s < n/alpha = {s_sup}"
                )

    if errors:
        raise ConfigError(errors)

    return ConfigDoc(
        path=str(path), dim=dim, cells=cells, extent=extent, kappa=kappa,
        epsilon=epsilon, s=s, lambda_spec=lambda_spec, mu_spec=mu_spec,
        u0_spec=u0_spec, v0_spec=v0_spec, T=T, dt_spec=dt_spec,
        output_every=output_every, c_tol=c_tol, text=text,
    )


def _parse_lambda(value, fail):
    tokens = value.split()
    try:
        if tokens[0] == "constant" and len(tokens) == 2:
            return ("constant", float(tokens[1]))
        if tokens[0] == "cosine" and len(tokens) in (4, 5):
            return ("cosine", float(tokens[1]), float(tokens[2]),
                    tuple(int(t) for t in tokens[3:]))
    except (ValueError, IndexError):
        pass
    fail(f"expected 'constant c' or 'cosine offset amp mx [my]', got {value!r}")
    return None


def _parse_mu(value, fail):
    tokens = value.split()
    try:
        if tokens[0] == "constant" and len(tokens) == 2:
            c = float(tokens[1])
            if c < 0:
                fail("constant mu must be nonnegative")
            return ("constant", c)
        if tokens[0] == "prototype" and len(tokens) == 3:
            mu1 = float(tokens[1])
            alpha = Fraction(tokens[2])
            if mu1 <= 0:
                fail("prototype mu1 must be positive")
            if alpha < 0:
                fail("prototype alpha must be nonnegative")
            return ("prototype", mu1, alpha)
    except (ValueError, IndexError):
        pass
    fail(f"expected 'constant c' or 'prototype mu1 alpha', got {value!r}")
    return None


def _parse_initial(value, fail):
    tokens = value.split()
    try:
        kind = tokens[0]
        if kind == "constant" and len(tokens) == 2:
            c = float(tokens[1])
            if c < 0:
                fail("initial data must be nonnegative")
            return ("constant", c)
        if kind == "gaussian" and len(tokens) == 3:
            amp, width = float(tokens[1]), float(tokens[2])
            if amp < 0 or width <= 0:
                fail("gaussian needs amp >= 0 and width > 0")
            return ("gaussian", amp, width)
        if kind == "cosine" and len(tokens) in (4, 5):
            offset, amp = float(tokens[1]), float(tokens[2])
            modes = tuple(int(t) for t in tokens[3:])
            if offset < abs(amp):
                fail("cosine initial data needs offset >= |amp| to stay nonnegative")
            return ("cosine", offset, amp, modes)
        if kind in ("random", "random_smooth") and len(tokens) == 3:
            lo, hi = float(tokens[1]), float(tokens[2])
            if lo < 0 or hi < lo:
                fail("random bounds need 0 <= lo <= hi")
            return (kind, lo, hi)
    except (ValueError, IndexError):
        pass
    fail(
        "expected one of 'constant c', 'gaussian amp width', "
        f"'cosine offset amp mx [my]', 'random lo hi', 'random_smooth lo hi'; got {value!r}"
    )
    return None


def _parse_dt(value, fail):
    tokens = value.split()
    try:
        if tokens[0] == "fixed" and len(tokens) == 2:
            dt = float(tokens[1])
            if dt <= 0:
                fail("fixed dt must be positive")
            return ("fixed", dt)
        if tokens[0] == "adaptive" and len(tokens) == 3:
            cfl, dt_max = float(tokens[1]), float(tokens[2])
            if not 0 < cfl <= 1:
                fail("cfl must lie in (0, 1]")
            if dt_max <= 0:
                fail("dt_max must be positive")
            return ("adaptive", cfl, dt_max)
    except (ValueError, IndexError):
        pass
    fail(f"expected 'fixed dt' or 'adaptive cfl dt_max', got {value!r}")
    return None
