"""Cell-centered rectangular grids, field storage and discrete quadratures.

The domain is an axis-aligned box centered at the origin (so prototype
damping coefficients mu(x) = mu1 |x|^alpha may vanish inside it), with a
uniform spacing per axis.  Fields hold one cell average per cell; gradients
live on faces and close with zero flux at the boundary.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

SNAPSHOT_MAGIC = b"KSLG"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIddd")


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if len(self.extent) != self.dim or len(self.cells) != self.dim:
            raise ValueError("extent and cells must have one entry per axis")
        if any(e <= 0 for e in self.extent):
            raise ValueError("extents must be positive")
        if any(c < 4 for c in self.cells):
            raise ValueError("at least 4 cells per axis")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        v = 1.0
        for h in self.spacing:
            v *= h
        return v

    @property
    def volume(self) -> float:
        v = 1.0
        for e in self.extent:
            v *= e
        return v

    @property
    def h_max(self) -> float:
        return max(self.spacing)

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        L = self.extent[axis]
        return -0.5 * L + h * (np.arange(self.cells[axis]) + 0.5)

    def axis_faces(self, axis: int) -> np.ndarray:
        """Coordinates of all face planes along an axis (cells+1 values)."""
        h = self.spacing[axis]
        L = self.extent[axis]
        return -0.5 * L + h * np.arange(self.cells[axis] + 1)

    def center_mesh(self) -> tuple[np.ndarray, ...]:
        axes = [self.axis_centers(a) for a in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def radius(self) -> np.ndarray:
        """|x| at cell centers."""
        mesh = self.center_mesh()
        if self.dim == 1:
            return np.abs(mesh[0])
        return np.hypot(mesh[0], mesh[1])

    def with_cells_scaled(self, factor: int) -> "GridSpec":
        return GridSpec(self.dim, self.extent, tuple(c * factor for c in self.cells))


@dataclass
class Field:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def constant_field(grid: GridSpec, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


@dataclass
class CoefficientField:
    """Sampled heterogeneous coefficients: growth lambda(x) and damping
    mu(x) >= 0, plus the discrete sup norm of lambda."""

    lambda_vals: Field
    mu_vals: Field
    lambda_sup: float = field(init=False)

    def __post_init__(self):
        if self.lambda_vals.grid is not self.mu_vals.grid and (
            self.lambda_vals.grid != self.mu_vals.grid
        ):
            raise ValueError("lambda and mu must share a grid")
        if np.any(self.mu_vals.values < 0):
            raise ValueError("mu must be nonnegative")
        self.lambda_sup = float(np.max(np.abs(self.lambda_vals.values)))


def sample_prototype_mu(grid: GridSpec, mu1: float, alpha: float) -> Field:
    """mu(x) = mu1 |x|^alpha evaluated at cell centers."""
    if mu1 <= 0:
        raise ValueError("mu1 must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return constant_field(grid, mu1)
    return Field(grid, mu1 * grid.radius() ** alpha)


def integrate(f: Field) -> float:
    """Discrete integral: sum of cell values times the cell volume."""
    return float(f.values.sum()) * f.grid.cell_volume


def integrate_values(grid: GridSpec, values: np.ndarray) -> float:
    return float(values.sum()) * grid.cell_volume


def face_diffs(grid: GridSpec, values: np.ndarray) -> tuple[np.ndarray, ...]:
    """Differences across interior faces per axis (right minus left)."""
    if grid.dim == 1:
        return (values[1:] - values[:-1],)
    return (values[1:, :] - values[:-1, :], values[:, 1:] - values[:, :-1])


def grad_sq_values(grid: GridSpec, values: np.ndarray) -> float:
    """Face-difference quadrature of the squared-gradient integral with
    zero-flux closure; each interior face carries a dual volume equal to
    the cell volume."""
    vol = grid.cell_volume
    total = 0.0
    for axis, diff in enumerate(face_diffs(grid, values)):
        h = grid.spacing[axis]
        total += float(np.sum((diff / h) ** 2)) * vol
    return total


def grad_sq_faces(f: Field) -> float:
    return grad_sq_values(f.grid, f.values)


def write_snapshot(path, grid: GridSpec, u: np.ndarray, v: np.ndarray, t: float) -> None:
    """Flat binary snapshot: little-endian header (magic, version, dim,
    cells x2, extent x2, time) followed by u then v as contiguous f64.
    Written atomically (temp + rename)."""
    from .ioutil import atomic_write_bytes

    cells = grid.cells + (1,) * (2 - grid.dim)
    extent = grid.extent + (0.0,) * (2 - grid.dim)
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.dim,
        cells[0], cells[1], extent[0], extent[1], float(t),
    )
    payload = (header
               + np.ascontiguousarray(u, dtype="<f8").tobytes()
               + np.ascontiguousarray(v, dtype="<f8").tobytes())
    atomic_write_bytes(path, payload)


def read_snapshot(path) -> tuple[GridSpec, np.ndarray, np.ndarray, float]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, version, dim, c0, c1, e0, e1, t = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    if dim == 1:
        grid = GridSpec(1, (e0,), (c0,))
    else:
        grid = GridSpec(2, (e0, e1), (c0, c1))
    count = c0 * (c1 if dim == 2 else 1)
    expected = _HEADER.size + 2 * 8 * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    u = data[:count].reshape(grid.shape).copy()
    v = data[count:].reshape(grid.shape).copy()
    return grid, u, v, float(t)


def fields_csv_text(grid: GridSpec, u: np.ndarray, v: np.ndarray) -> str:
    """CSV export of a pair of fields with columns x[,y],u,v; the first
    axis varies slowest."""
    lines = []
    if grid.dim == 1:
        lines.append("x,u,v")
        x = grid.axis_centers(0)
        for i in range(grid.cells[0]):
            lines.append(f"{x[i]:.17g},{u[i]:.17g},{v[i]:.17g}")
    else:
        lines.append("x,y,u,v")
        x = grid.axis_centers(0)
        y = grid.axis_centers(1)
        for i in range(grid.cells[0]):
            for j in range(grid.cells[1]):
                lines.append(f"{x[i]:.17g},{y[j]:.17g},{u[i, j]:.17g},{v[i, j]:.17g}")
    return "\n".join(lines) + "\n"
