"""Modulars and Luxemburg norms for variable-exponent and Orlicz spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, integrate
from .young import YoungFunctionSpec, phi_capital

__all__ = [
    "ExponentField",
    "NormBracketError",
    "modular",
    "luxemburg_norm",
    "orlicz_modular",
    "orlicz_luxemburg_norm",
    "holder_pairing",
    "bisect_decreasing",
]

DEFAULT_TOL = 1e-10


class NormBracketError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Nodal exponent values, all > 1, with cached inf/sup."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.size == 0 or not np.all(np.isfinite(vals)):
            raise ValueError("exponent field must be finite and non-empty")
        if not np.all(vals > 1.0):
            raise ValueError(f"exponent field must be > 1 everywhere (min {vals.min():.6g})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, q: float) -> "ExponentField":
        return cls(np.full(grid.shape, float(q)))

    @property
    def lo(self) -> float:
        return float(self.values.min())

    @property
    def hi(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return self.lo == self.hi

    def conjugate(self) -> "ExponentField":
        return ExponentField(self.values / (self.values - 1.0))


def _vals(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def _exp(q) -> np.ndarray | float:
    return q.values if isinstance(q, ExponentField) else q


def modular(u: GridFunction, q: ExponentField, grid: Grid | None = None) -> float:
    """int |u(x)|^{q(x)} dx with nodal (trapezoid) weights."""
    grid = u.grid if grid is None else grid
    return integrate(grid, np.abs(_vals(u)) ** _exp(q))


def bisect_decreasing(f, target: float, lo: float, hi: float, rtol: float, max_expand: int = 200):
    """Solve f(mu) = target for a decreasing f on (0, inf) by geometric bisection.

    The bracket is expanded geometrically until it straddles ``target``;
    bisection stops once ``hi / lo - 1 <= rtol``.
    """
    for _ in range(max_expand):
        if f(hi) <= target:
            break
        lo, hi = hi, hi * 16.0
    else:
        raise NormBracketError(f"could not bracket from above (hi={hi:.3e})")
    for _ in range(max_expand):
        if f(lo) >= target:
            break
        lo, hi = lo / 16.0, lo
    else:
        raise NormBracketError(f"could not bracket from below (lo={lo:.3e})")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo > 0):
        raise NormBracketError(f"bracket overflow: [{lo!r}, {hi!r}]")
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def luxemburg_norm(u: GridFunction, q: ExponentField, tol: float = DEFAULT_TOL, grid: Grid | None = None) -> float:
    """inf{mu > 0 : int |u/mu|^{q(x)} <= 1}, to relative tolerance ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = u.grid if grid is None else grid
    a = np.abs(_vals(u))
    top = float(a.max())
    if top == 0.0:
        return 0.0
    if not np.isfinite(top):
        raise NormBracketError("non-finite values")
    qv = _exp(q)
    w = grid.node_weights
    a = a / top  # work with the rescaled function; the norm scales back exactly
    rho = lambda mu: float(np.sum(w * (a / mu) ** qv))
    mu = bisect_decreasing(rho, 1.0, 1e-9, 1.0 + grid.volume, tol)
    return top * mu


def orlicz_modular(field, spec: YoungFunctionSpec, grid: Grid) -> float:
    """int Phi(|f|) over nodes or cells, whichever ``field`` lives on."""
    return integrate(grid, phi_capital(spec, np.abs(_vals(field)), check=False))


def orlicz_luxemburg_norm(field, spec: YoungFunctionSpec, grid: Grid, tol: float = DEFAULT_TOL) -> float:
    """inf{k > 0 : int Phi(f/k) <= 1} for a node or cell field.

    Applied to ``gradient_magnitude(u)`` it gives the Orlicz-Sobolev norm of u.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.abs(_vals(field))
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    rho = lambda k: orlicz_modular(a / k, spec, grid)
    return bisect_decreasing(rho, 1.0, top * 1e-9, top * (1.0 + grid.volume), tol)


def holder_pairing(u: GridFunction, v: GridFunction, p: ExponentField, tol: float = DEFAULT_TOL):
    """(|int u v|, (1/p- + 1/p'-) |u|_{p(x)} |v|_{p'(x)})."""
    grid = u.grid
    lhs = abs(integrate(grid, _vals(u) * _vals(v)))
    pc = p.conjugate()
    const = 1.0 / p.lo + 1.0 / pc.lo
    rhs = const * luxemburg_norm(u, p, tol) * luxemburg_norm(v, pc, tol, grid=grid)
    return lhs, rhs
