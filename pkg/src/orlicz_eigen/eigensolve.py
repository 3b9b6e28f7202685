"""Multi-start minimisation of the Rayleigh quotients and of T_{V,lambda}.

The iterate lives on the interior nodes.  Each restart runs a descent with
Armijo backtracking (L-BFGS directions by default, plain steepest descent
on request) and periodically a one-dimensional search over the scale of
the iterate: the quotients are not homogeneous, so the best multiple of
the current shape is not 1 in general.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .functionals import (
    I,
    J,
    ProblemSpec,
    QuotientUndefined,
    QuotientValue,
    a_parts,
    b_parts,
    grad_I,
    grad_J,
    m_parts,
    rayleigh_A,
)
from .grid import GridFunction, bump_function, random_smooth_function
from .young import ConditionReport

__all__ = [
    "SolverOptions",
    "EigenResult",
    "minimize_rayleigh_A",
    "minimize_rayleigh_B",
    "lambda_m",
    "solve_T",
    "residual_weak",
    "blowup_profile",
]

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverOptions:
    restarts: int = 8
    max_iterations: int = 4000
    gtol: float = 1e-8
    backtrack: float = 0.5
    armijo: float = 1e-4
    initial_step: float = 1.0
    seed: int = 0
    direction: str = "lbfgs"
    memory: int = 12
    ray_every: int = 10
    trivial_threshold: float = 1e-6

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.gtol > 0 and self.initial_step > 0 and self.armijo > 0 and self.trivial_threshold > 0):
            raise ValueError("tolerances and step sizes must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.direction not in ("lbfgs", "steepest"):
            raise ValueError(f"unknown direction rule {self.direction!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class EigenResult:
    value: float
    minimizer: GridFunction
    residual: float
    converged: bool
    restarts_used: int
    iterations: int
    condition_report: ConditionReport
    kind: str = "A"
    lam: float | None = None
    trivial: bool = False
    restart_values: list[float] = field(default_factory=list)

    @property
    def relaxed_mode(self) -> bool:
        return self.condition_report.relaxed_mode

    def summary(self) -> dict:
        res = self.residual
        return {
            "kind": self.kind,
            "value": self.value,
            "residual": None if res is None or not math.isfinite(res) else res,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "lambda": self.lam,
            "trivial": self.trivial,
            "conforming": not self.relaxed_mode,
            "restart_values": list(self.restart_values),
        }


# ---------------------------------------------------------------------------
# descent machinery on interior vectors


@dataclass
class _Run:
    x: np.ndarray
    f: float
    residual: float
    converged: bool
    iterations: int


def _ray_search(f: Callable[[np.ndarray], float], x: np.ndarray, fx: float):
    """Best multiple s*x on a log grid of s in [1e-3, 1e3], refined by Brent in log s."""
    logs = np.linspace(-3.0, 3.0, 13) * math.log(10.0)
    vals = np.array([f(math.exp(t) * x) for t in logs])
    vals[~np.isfinite(vals)] = np.inf
    k = int(np.argmin(vals))
    best_s, best_f = 1.0, fx
    if vals[k] < best_f:
        best_s, best_f = math.exp(logs[k]), vals[k]
    lo = logs[max(k - 1, 0)]
    hi = logs[min(k + 1, len(logs) - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda t: f(math.exp(t) * x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
        )
        if np.isfinite(res.fun) and res.fun < best_f:
            best_s, best_f = math.exp(res.x), float(res.fun)
    return best_s, best_f


def _descend(
    value: Callable[[np.ndarray], float],
    value_grad: Callable[[np.ndarray], tuple[float, np.ndarray, float, float]],
    x0: np.ndarray,
    opts: SolverOptions,
    stop_below: float = 0.0,
) -> _Run:
    """Minimise ``value`` from x0.

    ``value_grad`` returns (f, gradient, residual, magnitude), the last being
    the size of the terms that cancel in f; it sets the rounding slack of
    the Armijo test.  A run stops early once max|x| < ``stop_below``.
    """
    x = np.array(x0, dtype=float)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []

    def ray(x, f):
        s, fs = _ray_search(value, x, f)
        if s == 1.0 or not fs < f - 4 * _EPS * abs(f):
            return x, False
        return s * x, True

    f = value(x)
    x, _ = ray(x, f)
    f, g, res, mag = value_grad(x)
    it = 0
    for it in range(1, opts.max_iterations + 1):
        if res < opts.gtol or float(np.max(np.abs(x), initial=0.0)) < stop_below:
            return _Run(x, f, res, True, it - 1)
        if opts.direction == "lbfgs" and s_hist:
            d = _two_loop(g, s_hist, y_hist)
        else:
            d = -g
        gd = float(g @ d)
        if not gd < 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            gd = float(g @ d)
        if s_hist:
            alpha = 1.0
        else:
            # first step moves the largest entry by a tenth of the iterate's size
            scale = max(float(np.max(np.abs(x))), 1e-12)
            alpha = opts.initial_step * 0.1 * scale / max(float(np.max(np.abs(d))), 1e-300)
        slack = 8 * _EPS * max(abs(f), mag)
        accepted = False
        for _ in range(80):
            xn = x + alpha * d
            fn = value(xn)
            if np.isfinite(fn) and fn <= f + opts.armijo * alpha * gd + slack:
                accepted = True
                break
            alpha *= opts.backtrack
        if not accepted:
            if s_hist:
                s_hist.clear()
                y_hist.clear()
                continue
            log.debug("line search failed at iteration %d (residual %.3e)", it, res)
            return _Run(x, f, res, res < opts.gtol, it)
        fn, gn, resn, magn = value_grad(xn)
        sv, yv = xn - x, gn - g
        sy = float(sv @ yv)
        if sy > 1e-12 * float(np.linalg.norm(sv) * np.linalg.norm(yv)):
            s_hist.append(sv)
            y_hist.append(yv)
            if len(s_hist) > opts.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g, res, mag = xn, fn, gn, resn, magn
        if opts.ray_every and it % opts.ray_every == 0:
            x2, moved = ray(x, f)
            if moved:
                x = x2
                f, g, res, mag = value_grad(x)
                s_hist.clear()
                y_hist.clear()
    small = float(np.max(np.abs(x), initial=0.0)) < stop_below
    return _Run(x, f, res, res < opts.gtol or small, opts.max_iterations)


def _two_loop(g, s_hist, y_hist) -> np.ndarray:
    q = g.copy()
    alphas = []
    rhos = [1.0 / float(s @ y) for s, y in zip(s_hist, y_hist)]
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rhos), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


# ---------------------------------------------------------------------------
# objectives


def _node_scale(problem: ProblemSpec) -> np.ndarray:
    return problem.grid.restrict(problem.grid.node_weights)


def _quotient_objective(problem: ProblemSpec, parts):
    grid = problem.grid
    wi = _node_scale(problem)

    def value(x):
        u = grid.embed(x)
        if not np.any(u):
            return np.inf
        num, den = parts(problem, u, need_grad=False)[:2]
        return num / den if den > 0 else np.inf

    def value_grad(x):
        u = grid.embed(x)
        num, den, gnum, gden, mag = parts(problem, u)
        q = num / den
        gi = grid.restrict(gnum - q * gden)
        res = float(np.max(np.abs(gi) / wi)) / ((1.0 + abs(q)) * (1.0 + den))
        return q, gi / den, res, mag / den

    return value, value_grad


def _t_objective(problem: ProblemSpec, lam: float):
    grid = problem.grid
    wi = _node_scale(problem)

    def value(x):
        u = grid.embed(x)
        return J(problem, u) - lam * I(problem, u)

    def value_grad(x):
        u = grid.embed(x)
        num, iu, gj, gI, mag = a_parts(problem, u)
        f = num - lam * iu
        gi = grid.restrict(gj - lam * gI)
        res = float(np.max(np.abs(gi) / wi)) / ((1.0 + abs(lam)) * (1.0 + iu))
        return f, gi, res, mag + abs(lam) * iu

    return value, value_grad


def _starts(problem: ProblemSpec, opts: SolverOptions, initial: Sequence | None):
    grid = problem.grid
    given = [np.asarray(getattr(u, "values", u), dtype=float) for u in (initial or [])]
    for k in range(opts.restarts):
        if k < len(given):
            yield grid.restrict(given[k])
        elif k == len(given) and not given:
            yield grid.restrict(bump_function(grid).values)
        else:
            yield grid.restrict(random_smooth_function(grid, opts.seed * 7919 + k).values)


def _multistart(problem, opts, value, value_grad, initial, kind, lam=None) -> EigenResult:
    best = None
    values = []
    total_it = 0
    for k, x0 in enumerate(_starts(problem, opts, initial)):
        run = _descend(value, value_grad, x0, opts)
        total_it += run.iterations
        values.append(float(run.f))
        log.debug("%s restart %d: value %.12g residual %.3e converged %s", kind, k, run.f, run.residual, run.converged)
        key = (run.f, k)
        if best is None or key < best[0]:
            best = (key, run)
    run = best[1]
    u = GridFunction.from_interior(problem.grid, run.x)
    return EigenResult(
        value=float(run.f),
        minimizer=u,
        residual=float(run.residual),
        converged=bool(run.converged),
        restarts_used=len(values),
        iterations=total_it,
        condition_report=problem.condition_report,
        kind=kind,
        lam=lam,
        restart_values=values,
    )


# ---------------------------------------------------------------------------
# public operations


def minimize_rayleigh_A(problem: ProblemSpec, opts: SolverOptions | None = None, initial=None) -> EigenResult:
    """Estimate A(V) = inf J_V(u) / I(u).

    ``initial`` optionally supplies starting functions for the first restarts.
    The reported value is attained by the reported minimizer, hence an upper
    bound for the discrete infimum.
    """
    opts = opts or SolverOptions()
    value, value_grad = _quotient_objective(problem, a_parts)
    res = _multistart(problem, opts, value, value_grad, initial, "A")
    res.residual = residual_weak(problem, res.minimizer, res.value)
    return res


def minimize_rayleigh_B(problem: ProblemSpec, opts: SolverOptions | None = None, initial=None) -> EigenResult:
    """Estimate B(V).

    Seeding ``initial`` with the A-minimizer makes B <= A hold up to the
    criticality residual: at a critical point of J/I the B-quotient equals A.
    """
    opts = opts or SolverOptions()
    value, value_grad = _quotient_objective(problem, b_parts)
    return _multistart(problem, opts, value, value_grad, initial, "B")


def lambda_m(problem: ProblemSpec, opts: SolverOptions | None = None, initial=None) -> EigenResult:
    """inf (int Phi1 + Phi2 of |grad u|) / (int |u|^m / m); independent of V."""
    opts = opts or SolverOptions()
    value, value_grad = _quotient_objective(problem, m_parts)
    return _multistart(problem, opts, value, value_grad, initial, "lambda_m")


def solve_T(problem: ProblemSpec, lam: float, opts: SolverOptions | None = None, initial=None) -> EigenResult:
    """Multi-start minimisation of T_{V,lambda} = J_V - lambda I.

    ``trivial`` is set when every restart ends with max|u| below
    ``opts.trivial_threshold``.  Zero is always a local minimum of T on
    conforming instances, so nontrivial minimizers for lambda > A(V) are
    found from starts with T < 0 somewhere on their ray; passing the
    A-minimizer in ``initial`` provides one.
    """
    opts = opts or SolverOptions()
    value, value_grad = _t_objective(problem, lam)
    grid = problem.grid
    runs = []
    total_it = 0
    for k, x0 in enumerate(_starts(problem, opts, initial)):
        run = _descend(value, value_grad, x0, opts, stop_below=opts.trivial_threshold)
        total_it += run.iterations
        runs.append(run)
    sizes = [float(np.max(np.abs(r.x))) if r.x.size else 0.0 for r in runs]
    k = min(range(len(runs)), key=lambda i: (runs[i].f, i))
    run = runs[k]
    trivial = all(s < opts.trivial_threshold for s in sizes)
    u = GridFunction.from_interior(grid, run.x)
    resid = float("nan") if u.is_zero() else residual_weak(problem, u, lam)
    return EigenResult(
        value=float(run.f),
        minimizer=u,
        residual=resid,
        converged=all(r.converged for r in runs),
        restarts_used=len(runs),
        iterations=total_it,
        condition_report=problem.condition_report,
        kind="T",
        lam=float(lam),
        trivial=trivial,
        restart_values=[float(r.f) for r in runs],
    )


def residual_weak(problem: ProblemSpec, u, lam: float) -> float:
    """Normalised defect of the weak eigenvalue identity, tested on interior hat functions.

    max_i |<J'(u), e_i> - lam <I'(u), e_i>| / (w_i (1 + |lam|)(1 + I(u))),
    with w_i the quadrature weight of node i.  Zero iff u is a discrete
    eigenfunction for lam.
    """
    vals = getattr(u, "values", u)
    if not np.any(vals):
        raise QuotientUndefined("residual undefined at u = 0")
    grid = problem.grid
    G = grid.restrict(grad_J(problem, vals) - lam * grad_I(problem, vals))
    wi = _node_scale(problem)
    return float(np.max(np.abs(G) / wi)) / ((1.0 + abs(lam)) * (1.0 + I(problem, vals)))


def blowup_profile(problem: ProblemSpec, u, t_values) -> list[QuotientValue]:
    """rayleigh_A(t u) for each t (both tails diverge for conforming instances)."""
    vals = getattr(u, "values", u)
    if not np.any(vals):
        raise QuotientUndefined("quotient undefined at zero")
    out = []
    for t in t_values:
        if not t > 0:
            raise ValueError("t_values must be positive")
        out.append(rayleigh_A(problem, t * np.asarray(vals)))
    return out
