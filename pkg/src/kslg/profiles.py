"""Quintic smoothstep and bump profiles shared by the flux truncation and
the space-time test functions.  All pieces are C^2."""

from __future__ import annotations

import numpy as np


def smoothstep(x):
    """6x^5 - 15x^4 + 10x^3 clamped to [0, 1]; C^2 at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def smoothstep_deriv(x):
    """Derivative 30 x^2 (x - 1)^2 of the clamped smoothstep (0 outside)."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    d = np.where(inside, 30.0 * x * x * (x - 1.0) * (x - 1.0), 0.0)
    return d


def bump(x, lo: float, hi: float):
    """C^2 bump on [lo, hi]: rises over the left half, falls over the right,
    value 1 at the midpoint, identically 0 outside."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    up = smoothstep((np.asarray(x, dtype=float) - lo) / half)
    down = smoothstep((hi - np.asarray(x, dtype=float)) / half)
    return np.where(np.asarray(x, dtype=float) < mid, up, down)


def bump_deriv(x, lo: float, hi: float):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = np.asarray(x, dtype=float)
    up = smoothstep_deriv((x - lo) / half) / half
    down = -smoothstep_deriv((hi - x) / half) / half
    return np.where(x < mid, up, down)


def falling_step(x, hi: float):
    """C^2 ramp from 1 at x = 0 down to 0 at x = hi (0 beyond)."""
    return smoothstep((hi - np.asarray(x, dtype=float)) / hi)


def falling_step_deriv(x, hi: float):
    return -smoothstep_deriv((hi - np.asarray(x, dtype=float)) / hi) / hi
