"""Box meshes, nodal grid functions, forward-difference gradients, quadrature.

Conventions (also used by the CSV format):

* nodes: ``n_k`` per axis, ``x_k = lower_k + i_k h_k``, ``h_k = (upper_k - lower_k)/(n_k - 1)``;
* cells: ``n_k - 1`` per axis, cell ``c`` has lower corner node ``c``;
* cell gradient: forward differences from the lower corner, one per axis;
* cell fields integrate with the midpoint rule (cell volume ``prod h_k``);
* node fields integrate with the tensor trapezoid rule
  (1-D weights ``h/2, h, ..., h, h/2``).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "gradient_components",
    "gradient_magnitude",
    "integrate",
    "random_test_function",
    "random_smooth_function",
    "bump_function",
    "read_csv",
    "write_csv",
    "format_csv",
]


@dataclass(frozen=True, eq=True)
class Grid:
    shape: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lower = tuple(float(a) for a in self.lower)
        upper = tuple(float(b) for b in self.upper)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(shape)}")
        if not len(lower) == len(upper) == len(shape):
            raise ValueError("lower/upper must have one entry per axis")
        if any(n < 3 for n in shape):
            raise ValueError(f"need at least 3 nodes per axis, got {shape}")
        if any(b <= a for a, b in zip(lower, upper)):
            raise ValueError("box extents must satisfy lower < upper")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, dim: int, nodes: int, lower: float = 0.0, upper: float = 1.0) -> "Grid":
        return cls((nodes,) * dim, (lower,) * dim, (upper,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.shape))

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def node_weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for k, (n, h) in enumerate(zip(self.shape, self.spacing)):
            w1 = np.full(n, h)
            w1[0] = w1[-1] = 0.5 * h
            sh = [1] * self.dim
            sh[k] = n
            w = w * w1.reshape(sh)
        w.setflags(write=False)
        return w

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        mask.setflags(write=False)
        return mask

    @property
    def boundary(self) -> np.ndarray:
        return ~self.interior

    @property
    def n_interior(self) -> int:
        return int(np.prod([n - 2 for n in self.shape]))

    def coordinates(self) -> tuple[np.ndarray, ...]:
        axes = [np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.shape)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "lower": list(self.lower), "upper": list(self.upper)}

    # interior <-> full nodal arrays
    def embed(self, x: np.ndarray) -> np.ndarray:
        u = np.zeros(self.shape)
        u[(slice(1, -1),) * self.dim] = np.reshape(x, [n - 2 for n in self.shape])
        return u

    def restrict(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u)[(slice(1, -1),) * self.dim].ravel()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a grid.  ``dirichlet_zero`` pins boundary nodes to 0."""

    grid: Grid
    values: np.ndarray
    dirichlet_zero: bool = True

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if self.dirichlet_zero and np.any(vals[self.grid.boundary] != 0.0):
            raise ValueError("dirichlet_zero grid function has nonzero boundary values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid, dirichlet_zero: bool = True) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape), dirichlet_zero)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)), dirichlet_zero=False)

    @classmethod
    def from_interior(cls, grid: Grid, x: np.ndarray) -> "GridFunction":
        return cls(grid, grid.embed(x), True)

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values, self.dirichlet_zero)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def gradient_components(grid: Grid, u) -> list[np.ndarray]:
    """Forward differences per axis, each on the cell array."""
    u = _values(u)
    comps = []
    for k, h in enumerate(grid.spacing):
        d = np.diff(u, axis=k) / h
        sl = tuple(slice(None) if j == k else slice(0, -1) for j in range(grid.dim))
        comps.append(d[sl])
    return comps


def gradient_magnitude(u, grid: Grid | None = None) -> np.ndarray:
    """Euclidean norm of the cell gradient; one value per cell."""
    if grid is None:
        grid = u.grid
    comps = gradient_components(grid, u)
    return np.sqrt(sum(c * c for c in comps))


def integrate(grid: Grid, f) -> float:
    """Midpoint rule for cell fields, trapezoid weights for node fields."""
    f = _values(f)
    if f.shape == grid.shape:
        return float(np.sum(grid.node_weights * f))
    if f.shape == grid.cell_shape:
        return float(np.sum(f) * grid.cell_volume)
    if f.ndim == 0:
        return float(f) * grid.volume
    raise ValueError(f"field shape {f.shape} matches neither nodes {grid.shape} nor cells {grid.cell_shape}")


def random_test_function(grid: Grid, seed: int) -> GridFunction:
    """Uniform[-1, 1] values on interior nodes, zero on the boundary."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, grid.n_interior)
    return GridFunction.from_interior(grid, x)


def bump_function(grid: Grid) -> GridFunction:
    """Product of coordinate sine half-waves, max 1."""
    vals = np.ones(grid.shape)
    for c, a, b in zip(grid.coordinates(), grid.lower, grid.upper):
        vals = vals * np.sin(np.pi * (c - a) / (b - a))
    vals[grid.boundary] = 0.0
    return GridFunction(grid, vals)


def random_smooth_function(grid: Grid, seed: int, modes: int = 4) -> GridFunction:
    """Random combination of low sine modes, scaled to max |u| = 1."""
    rng = np.random.default_rng(seed)
    coords = grid.coordinates()
    vals = np.zeros(grid.shape)
    for idx in np.ndindex(*(modes,) * grid.dim):
        term = rng.normal() / (1.0 + sum(idx))
        for k, (c, a, b) in enumerate(zip(coords, grid.lower, grid.upper)):
            term = term * np.sin((idx[k] + 1) * np.pi * (c - a) / (b - a))
        vals = vals + term
    vals[grid.boundary] = 0.0
    vals /= np.max(np.abs(vals))
    return GridFunction(grid, vals)


# ---------------------------------------------------------------------------
# CSV: one row per node, index columns i[,j[,k]] then value; "%.17g" floats.

_INDEX_NAMES = ("i", "j", "k")


def format_csv(u: GridFunction) -> str:
    grid = u.grid
    buf = io.StringIO()
    buf.write(",".join(_INDEX_NAMES[: grid.dim] + ("value",)) + "\n")
    for idx in np.ndindex(*grid.shape):
        buf.write(",".join(str(i) for i in idx) + "," + format(float(u.values[idx]), ".17g") + "\n")
    return buf.getvalue()


def write_csv(u: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(u))


def read_csv(path, grid: Grid, dirichlet_zero: bool | None = None) -> GridFunction:
    vals = np.full(grid.shape, np.nan)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = list(_INDEX_NAMES[: grid.dim]) + ["value"]
        if header != expected:
            raise ValueError(f"{path}: expected header {expected}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != grid.dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {grid.dim + 1} columns")
            idx = tuple(int(v) for v in row[:-1])
            vals[idx] = float(row[-1])
    if np.isnan(vals).any():
        raise ValueError(f"{path}: missing nodes ({int(np.isnan(vals).sum())} of {grid.size})")
    if dirichlet_zero is None:
        dirichlet_zero = not np.any(vals[grid.boundary])
    return GridFunction(grid, vals, dirichlet_zero)
