"""Energies J_V, I, T_{V,lambda}, the two Rayleigh quotients and their first variations.

All energies are evaluated on the discrete level (gradient terms on cells,
zero-order terms on nodes) and the first variations are the exact
derivatives of these discrete sums with respect to the nodal values.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .grid import Grid, GridFunction, gradient_components, integrate, random_test_function
from .lebesgue import ExponentField, luxemburg_norm
from .young import ConditionReport, YoungFunctionSpec, check_conditions, phi_capital, phi_eval, phi_prime

__all__ = [
    "ProblemSpec",
    "QuotientValue",
    "QuotientUndefined",
    "J",
    "I",
    "T",
    "gateaux_J",
    "gateaux_I",
    "grad_J",
    "grad_I",
    "rayleigh_A",
    "rayleigh_B",
    "lemma1_empirical",
    "potential_absorption_constant",
    "gradient_energy",
    "a_parts",
    "b_parts",
    "m_parts",
]

# below this magnitude a(|grad u|) grad u is replaced by its limit 0
_ZERO_GRAD = 1e-300


class QuotientUndefined(ValueError):
    """The Rayleigh quotient was requested at u = 0."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    grid: Grid
    phi1: YoungFunctionSpec
    phi2: YoungFunctionSpec
    q1: ExponentField
    q2: ExponentField
    m: ExponentField
    r: ExponentField
    V: GridFunction
    condition_report: ConditionReport = field(init=False)

    def __post_init__(self):
        for name in ("q1", "q2", "m", "r"):
            fld = getattr(self, name)
            if fld.values.shape != self.grid.shape:
                raise ValueError(f"exponent field {name} has shape {fld.values.shape}, grid is {self.grid.shape}")
        if self.V.grid != self.grid:
            raise ValueError("potential V lives on a different grid")
        rep = check_conditions(self.phi1, self.phi2, self.q1, self.q2, self.m, self.r, self.grid.dim)
        object.__setattr__(self, "condition_report", rep)

    @classmethod
    def constant(cls, grid: Grid, phi1, phi2, q1: float, q2: float, m: float, r: float, V=0.0) -> "ProblemSpec":
        """Instance with constant exponents; ``V`` may be a number or a GridFunction."""
        ef = lambda c: ExponentField.constant(grid, c)
        if not isinstance(V, GridFunction):
            V = GridFunction.constant(grid, V)
        return cls(grid, phi1, phi2, ef(q1), ef(q2), ef(m), ef(r), V)

    def with_potential(self, V) -> "ProblemSpec":
        if not isinstance(V, GridFunction):
            V = GridFunction(self.grid, np.broadcast_to(np.asarray(V, dtype=float), self.grid.shape), False)
        elif V.dirichlet_zero:
            V = GridFunction(self.grid, V.values, False)
        return replace(self, V=V)

    @property
    def relaxed_mode(self) -> bool:
        return self.condition_report.relaxed_mode

    @cached_property
    def _w(self) -> np.ndarray:
        return self.grid.node_weights

    def potential_norm(self, tol: float = 1e-10) -> float:
        return luxemburg_norm(self.V, self.r, tol)


@dataclass(frozen=True)
class QuotientValue:
    numerator: float
    denominator: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


def _u(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)


def _signed_power(u: np.ndarray, e) -> np.ndarray:
    """|u|^{e-1} sign(u), i.e. |u|^{e-2} u extended by 0 at u = 0."""
    return np.sign(u) * np.abs(u) ** (e - 1.0)


def _cells(problem: ProblemSpec, u):
    comps = gradient_components(problem.grid, u)
    g = np.sqrt(sum(c * c for c in comps))
    return comps, g


def _assemble(grid: Grid, comps, coef) -> np.ndarray:
    """Nodal gradient of sum_c vol * F(grad_c u) given dF/d(grad u) = coef * grad u."""
    out = np.zeros(grid.shape)
    vol = grid.cell_volume
    lower = tuple(slice(0, -1) for _ in range(grid.dim))
    for k, h in enumerate(grid.spacing):
        flux = coef * comps[k] * (vol / h)
        upper = tuple(slice(1, None) if j == k else slice(0, -1) for j in range(grid.dim))
        out[upper] += flux
        out[lower] -= flux
    return out


def _a_sum(problem: ProblemSpec, g: np.ndarray) -> np.ndarray:
    """a1(g) + a2(g) with a(t) = phi(t)/t, 0 where g vanishes."""
    out = np.zeros_like(g)
    nz = g > _ZERO_GRAD
    gn = g[nz]
    out[nz] = (phi_eval(problem.phi1, gn) + phi_eval(problem.phi2, gn)) / gn
    return out


def gradient_energy(problem: ProblemSpec, u) -> float:
    """int Phi1(|grad u|) + Phi2(|grad u|)."""
    _, g = _cells(problem, _u(u))
    return float(
        np.sum(phi_capital(problem.phi1, g, check=False) + phi_capital(problem.phi2, g, check=False))
        * problem.grid.cell_volume
    )


def _potential_term(problem: ProblemSpec, u: np.ndarray) -> float:
    m = problem.m.values
    return float(np.sum(problem._w * problem.V.values / m * np.abs(u) ** m))


def J(problem: ProblemSpec, u) -> float:
    """J_V(u) = int Phi1(|grad u|) + int Phi2(|grad u|) + int V/m |u|^m."""
    u = _u(u)
    return gradient_energy(problem, u) + _potential_term(problem, u)


def I(problem: ProblemSpec, u) -> float:
    """I(u) = int |u|^{q1}/q1 + int |u|^{q2}/q2."""
    u = _u(u)
    q1, q2 = problem.q1.values, problem.q2.values
    a = np.abs(u)
    return float(np.sum(problem._w * (a**q1 / q1 + a**q2 / q2)))


def T(problem: ProblemSpec, u, lam: float) -> float:
    """T_{V,lambda}(u) = J_V(u) - lambda I(u)."""
    return J(problem, u) - lam * I(problem, u)


def grad_J(problem: ProblemSpec, u) -> np.ndarray:
    """Nodal array G with <J'(u), v> = sum(G * v)."""
    u = _u(u)
    comps, g = _cells(problem, u)
    out = _assemble(problem.grid, comps, _a_sum(problem, g))
    out += problem._w * problem.V.values * _signed_power(u, problem.m.values)
    return out


def grad_I(problem: ProblemSpec, u) -> np.ndarray:
    u = _u(u)
    return problem._w * (_signed_power(u, problem.q1.values) + _signed_power(u, problem.q2.values))


def _interior_only(problem: ProblemSpec, G: np.ndarray) -> np.ndarray:
    # test functions vanish on the boundary
    return np.where(problem.grid.interior, G, 0.0)


def gateaux_J(problem: ProblemSpec, u, v) -> float:
    """<J_V'(u), v> for a Dirichlet-zero direction v."""
    return float(np.sum(_interior_only(problem, grad_J(problem, u)) * _u(v)))


def gateaux_I(problem: ProblemSpec, u, v) -> float:
    """<I'(u), v> for a Dirichlet-zero direction v."""
    return float(np.sum(_interior_only(problem, grad_I(problem, u)) * _u(v)))


# ---------------------------------------------------------------------------
# quotients: (numerator, denominator, their nodal gradients)


def a_parts(problem: ProblemSpec, u, need_grad: bool = True):
    """J_V and I with gradients; the quotient defining A(V).

    Every ``*_parts`` function returns ``(num, den, grad_num, grad_den, mag)``
    where ``mag`` is the sum of the absolute sizes of the numerator's terms
    (the scale of its rounding error).
    """
    u = _u(u)
    pot = _potential_term(problem, u)
    ge = gradient_energy(problem, u)
    num, den = ge + pot, I(problem, u)
    mag = ge + abs(pot)
    if not need_grad:
        return num, den, None, None, mag
    return num, den, grad_J(problem, u), grad_I(problem, u), mag


def b_parts(problem: ProblemSpec, u, need_grad: bool = True):
    """Numerator int phi(|grad u|)|grad u| + int V |u|^m over int |u|^{q1} + |u|^{q2}."""
    u = _u(u)
    grid = problem.grid
    w = problem._w
    comps, g = _cells(problem, u)
    m, q1, q2 = problem.m.values, problem.q1.values, problem.q2.values
    V = problem.V.values
    a = np.abs(u)
    grad_part = float(np.sum(phi_eval(problem.phi1, g) * g + phi_eval(problem.phi2, g) * g) * grid.cell_volume)
    pot = float(np.sum(w * V * a**m))
    num = grad_part + pot
    mag = abs(grad_part) + abs(pot)
    den = float(np.sum(w * (a**q1 + a**q2)))
    if not need_grad:
        return num, den, None, None, mag
    # d/dg [phi(g) g] = phi'(g) g + phi(g); chain rule through g = |grad u|
    coef = np.zeros_like(g)
    nz = g > _ZERO_GRAD
    gn = g[nz]
    coef[nz] = (
        phi_prime(problem.phi1, gn) * gn
        + phi_eval(problem.phi1, gn)
        + phi_prime(problem.phi2, gn) * gn
        + phi_eval(problem.phi2, gn)
    ) / gn
    gnum = _assemble(grid, comps, coef) + w * V * m * _signed_power(u, m)
    gden = w * (q1 * _signed_power(u, q1) + q2 * _signed_power(u, q2))
    return num, den, gnum, gden, mag


def m_parts(problem: ProblemSpec, u, need_grad: bool = True):
    """int Phi1 + Phi2 of |grad u| over int |u|^m / m (the quotient defining lambda_m)."""
    u = _u(u)
    m = problem.m.values
    num = gradient_energy(problem, u)
    den = float(np.sum(problem._w * np.abs(u) ** m / m))
    if not need_grad:
        return num, den, None, None, num
    comps, g = _cells(problem, u)
    gnum = _assemble(problem.grid, comps, _a_sum(problem, g))
    gden = problem._w * _signed_power(u, m)
    return num, den, gnum, gden, num


def _quotient(parts, problem, u) -> QuotientValue:
    u = _u(u)
    if not np.any(u):
        raise QuotientUndefined("quotient undefined at zero")
    num, den = parts(problem, u, need_grad=False)[:2]
    return QuotientValue(num, den)


def rayleigh_A(problem: ProblemSpec, u) -> QuotientValue:
    """QuotientValue(J_V(u), I(u))."""
    return _quotient(a_parts, problem, u)


def rayleigh_B(problem: ProblemSpec, u) -> QuotientValue:
    return _quotient(b_parts, problem, u)


# ---------------------------------------------------------------------------


def potential_absorption_constant(problem: ProblemSpec, epsilon: float, samples: int = 64, seed: int = 0) -> float:
    """Empirical lower estimate of the constant C_eps in

        |int V/m |u|^m| <= eps int (Phi1 + Phi2)(|grad u|) + C_eps |V|_r int (|u|^{m-} + |u|^{m+})

    taken as the max over random ``u`` of the ratio that C_eps must dominate.
    Amplitudes are spread log-uniformly over [1e-2, 1e2].
    """
    V = problem.V.values
    if not np.any(V):
        return 0.0
    vnorm = luxemburg_norm(problem.V, problem.r)
    m = problem.m.values
    mlo, mhi = problem.m.lo, problem.m.hi
    rng = np.random.default_rng(seed)
    best = -np.inf
    for i in range(samples):
        amp = 10.0 ** rng.uniform(-2.0, 2.0)
        u = amp * random_test_function(problem.grid, seed * 100003 + i).values
        a = np.abs(u)
        pot = abs(integrate(problem.grid, V / m * a**m))
        grad = gradient_energy(problem, u)
        lower = integrate(problem.grid, a**mlo + a**mhi)
        best = max(best, (pot - epsilon * grad) / (vnorm * lower))
    return float(best)


# name used by the public operation list
lemma1_empirical = potential_absorption_constant
