"""Optimisation of A(V) over closed balls of potentials in L^{r(x)}.

``a_star`` (minimum over the ball) uses alternating minimisation: for fixed
V the principal quotient is minimised in u; for fixed u the quotient is
affine in V, ``J_V(u)/I(u) = const + integrate(V * w)`` with
``w = |u|^m / (m I(u))``, and its exact minimiser over the ball is computed
by ``ball_linear_minimize``.  Each half-step cannot increase the value, so
the scheme is monotone, but it only certifies a local optimum in (u, V);
``sample_ball`` supports audits against random feasible potentials.

``a_upper`` (maximum over the ball) exploits that A(V) is an infimum of
affine functions of V, hence concave: it runs Frank-Wolfe with a line
search, whose duality gap bounds the remaining suboptimality.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .eigensolve import EigenResult, SolverOptions, minimize_rayleigh_A
from .functionals import I, ProblemSpec
from .grid import Grid, GridFunction
from .lebesgue import ExponentField, NormBracketError, bisect_decreasing, luxemburg_norm

__all__ = [
    "BallSpec",
    "BallOptimum",
    "SweepRow",
    "MonotonicityError",
    "ZeroRadiusBracketError",
    "ball_linear_minimize",
    "potential_sensitivity",
    "a_star",
    "a_star_sweep",
    "a_upper",
    "continuity_probe",
    "find_zero_radius",
    "mu_set_function",
    "sweep_violations",
    "sample_ball",
    "format_sweep_csv",
]

log = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-8
ZERO_TOL = 1e-3
STALL_TOL = 1e-10
MAX_SWEEPS = 500


class MonotonicityError(RuntimeError):
    """An alternating sweep increased the objective beyond rounding."""


class ZeroRadiusBracketError(ValueError):
    """a_star does not change sign on [0, R_max]."""


@dataclass(frozen=True, eq=False)
class BallSpec:
    radius: float
    r: ExponentField

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be finite and >= 0, got {self.radius}")

    def norm(self, V) -> float:
        grid = V.grid
        return luxemburg_norm(V, self.r, grid=grid)

    def contains(self, V: GridFunction, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.norm(V) <= self.radius + tol


@dataclass
class BallOptimum:
    """Result of ``a_star`` / ``a_upper``; unpacks as (value, potential, result)."""

    value: float
    potential: GridFunction
    result: EigenResult
    sweeps: int
    converged: bool
    history: list[float] = field(default_factory=list)
    gap: float | None = None

    def __iter__(self):
        return iter((self.value, self.potential, self.result))


@dataclass
class SweepRow:
    R: float
    a_star: float
    v_star: GridFunction
    iterations: int
    converged: bool
    residual: float
    minimizer: GridFunction | None = None


def _wvals(w) -> np.ndarray:
    return w.values if isinstance(w, GridFunction) else np.asarray(w, dtype=float)


def ball_linear_minimize(
    w: GridFunction, r: ExponentField, R: float, maximize: bool = False, grid: Grid | None = None
) -> GridFunction:
    """argmin of integrate(V * w) over |V|_{r(x)} <= R, for nodal w >= 0.

    The Lagrange conditions give ``V = -R (kappa w / r)^{1/(r-1)}`` with the
    scalar kappa fixed by ``int |V/R|^r = 1``; it is found by bisection.  For
    constant r this is ``-c w^{1/(r-1)}``.  ``maximize`` flips the sign.
    """
    grid = w.grid if grid is None else grid
    wv = _wvals(w)
    if np.any(wv < 0):
        raise ValueError("w must be non-negative")
    if R < 0:
        raise ValueError("radius must be non-negative")
    top = float(wv.max())
    if R == 0 or top == 0.0:
        return GridFunction.zeros(grid, dirichlet_zero=False)
    rv = r.values
    e = 1.0 / (rv - 1.0)
    wn = wv / top
    omega = grid.node_weights

    def shape(kappa):
        return (kappa * wn / rv) ** e

    # rho(kappa) = int shape^r increases with kappa; bisect on t = 1/kappa
    rho = lambda t: float(np.sum(omega * shape(1.0 / t) ** rv))
    t = bisect_decreasing(rho, 1.0, 1e-3, 1e3, 1e-15)
    s = shape(1.0 / t)
    # land on the feasible side of the constraint
    norm = luxemburg_norm(s, r, tol=1e-14, grid=grid)
    if norm > 1.0:
        s = s / norm
    sign = 1.0 if maximize else -1.0
    return GridFunction(grid, sign * R * s, dirichlet_zero=False)


def potential_sensitivity(problem: ProblemSpec, u) -> np.ndarray:
    """w = |u|^m / (m I(u)): d/dV of J_V(u)/I(u) as a density."""
    vals = getattr(u, "values", u)
    m = problem.m.values
    return np.abs(vals) ** m / (m * I(problem, vals))


def _inner(opts: SolverOptions) -> SolverOptions:
    return replace(opts, restarts=1)


def a_star(
    problem: ProblemSpec,
    ball: BallSpec,
    opts: SolverOptions | None = None,
    warm: tuple[GridFunction, GridFunction] | None = None,
    stall_tol: float = STALL_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> BallOptimum:
    """min of A(V) over the ball, by alternating minimisation.

    ``warm`` is an optional (V, u) pair; V must lie in the ball.  Without it
    the first u-step is a full multi-start at V = 0.  Iteration stops when
    two successive values differ by less than ``stall_tol * (1 + |A|)``.
    """
    opts = opts or SolverOptions()
    grid = problem.grid
    if warm is None:
        V = GridFunction.zeros(grid, dirichlet_zero=False)
        res = minimize_rayleigh_A(problem.with_potential(V), opts)
    else:
        V, u0 = warm
        if not ball.contains(V):
            raise ValueError("warm-start potential lies outside the ball")
        res = minimize_rayleigh_A(problem.with_potential(V), _inner(opts), initial=[u0])
    value = res.value
    history = [value]
    iterations = res.iterations
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        u = res.minimizer
        V_new = ball_linear_minimize(GridFunction(grid, potential_sensitivity(problem, u), False), ball.r, ball.radius)
        res_new = minimize_rayleigh_A(problem.with_potential(V_new), _inner(opts), initial=[u])
        iterations += res_new.iterations
        slack = 1e-12 * (1.0 + abs(value))
        if res_new.value > value + slack:
            raise MonotonicityError(f"sweep {sweeps}: value rose from {value!r} to {res_new.value!r}")
        step = value - res_new.value
        V, res, value = V_new, res_new, res_new.value
        history.append(value)
        if step < stall_tol * (1.0 + abs(value)):
            converged = True
            break
    res.iterations = iterations
    return BallOptimum(value, V, res, sweeps, converged and res.converged, history)


def a_upper(
    problem: ProblemSpec,
    ball: BallSpec,
    opts: SolverOptions | None = None,
    gap_tol: float = 1e-6,
    max_steps: int = 200,
) -> BallOptimum:
    """max of A(V) over the ball by Frank-Wolfe.

    A is concave in V with supergradient w = |u_V|^m / (m I(u_V)); the vertex
    is ``ball_linear_minimize(w, maximize=True)`` and the step length is
    chosen by a bounded scalar search.  The returned ``gap`` is the
    Frank-Wolfe duality gap, an upper bound on max A - value (valid as far as
    the inner minimisations are global).
    """
    opts = opts or SolverOptions()
    grid = problem.grid
    w_nodes = grid.node_weights
    V = GridFunction.zeros(grid, dirichlet_zero=False)
    res = minimize_rayleigh_A(problem.with_potential(V), opts)
    history = [res.value]
    iterations = res.iterations
    gap = math.inf
    steps = 0
    if ball.radius == 0:
        return BallOptimum(res.value, V, res, 0, res.converged, history, 0.0)
    for steps in range(1, max_steps + 1):
        u = res.minimizer
        w = potential_sensitivity(problem, u)
        S = ball_linear_minimize(GridFunction(grid, w, False), ball.r, ball.radius, maximize=True)
        D = S.values - V.values
        gap = float(np.sum(w_nodes * D * w))
        if gap <= gap_tol * (1.0 + abs(res.value)):
            break
        cache: dict[float, EigenResult] = {}

        def neg(gamma):
            Vg = GridFunction(grid, V.values + gamma * D, False)
            r_g = minimize_rayleigh_A(problem.with_potential(Vg), _inner(opts), initial=[u])
            cache[gamma] = r_g
            return -r_g.value

        minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-6})
        if 1.0 not in cache:
            neg(1.0)  # the bounded search never probes the endpoint itself
        gamma = max(cache, key=lambda g: (cache[g].value, -g))
        r_new = cache[gamma]
        iterations += sum(r.iterations for r in cache.values())
        if r_new.value <= res.value:
            break
        V = GridFunction(grid, V.values + gamma * D, False)
        res = r_new
        history.append(res.value)
    res.iterations = iterations
    # a stall (no improving step) leaves a valid lower bound for the maximum but is not convergence
    converged = gap <= gap_tol * (1.0 + abs(res.value))
    return BallOptimum(res.value, V, res, steps, bool(converged and res.converged), history, gap)


def a_star_sweep(
    problem: ProblemSpec,
    R_values,
    r: ExponentField | None = None,
    opts: SolverOptions | None = None,
    warm_start: bool = True,
    stall_tol: float = STALL_TOL,
) -> list[SweepRow]:
    """One row per radius (ascending), each warm-started from the previous optimum.

    With warm starts the previous V_star is feasible for the next ball and
    the alternation is monotone, so the column is non-increasing by
    construction; ``sweep_violations`` re-checks it.
    """
    R_values = [float(R) for R in R_values]
    if any(R < 0 for R in R_values):
        raise ValueError("radii must be non-negative")
    if any(b < a for a, b in zip(R_values, R_values[1:])):
        raise ValueError("radii must be sorted ascending")
    r = problem.r if r is None else r
    rows: list[SweepRow] = []
    warm = None
    for R in R_values:
        opt = a_star(problem, BallSpec(R, r), opts, warm=warm, stall_tol=stall_tol)
        rows.append(
            SweepRow(
                R=R,
                a_star=opt.value,
                v_star=opt.potential,
                iterations=opt.result.iterations,
                converged=opt.converged,
                residual=opt.result.residual,
                minimizer=opt.result.minimizer,
            )
        )
        log.info("R=%.6g a_star=%.12g sweeps=%d converged=%s", R, opt.value, opt.sweeps, opt.converged)
        if warm_start:
            warm = (opt.potential, opt.result.minimizer)
    bad = sweep_violations(rows, 2 * _tol(opts))
    if bad:
        log.warning("a_star sweep not monotone at rows %s", bad)
    return rows


def _tol(opts: SolverOptions | None) -> float:
    return (opts or SolverOptions()).gtol


def sweep_violations(rows: list[SweepRow], tol: float, increasing: bool = False) -> list[int]:
    """Indices i with rows[i] breaking monotonicity w.r.t. rows[i-1] by more than tol."""
    out = []
    for i in range(1, len(rows)):
        d = rows[i].a_star - rows[i - 1].a_star
        if (d < -tol) if increasing else (d > tol):
            out.append(i)
    return out


def continuity_probe(
    problem: ProblemSpec,
    R: float,
    opts: SolverOptions | None = None,
    factors=(0.1, 0.05, 0.025),
    base: BallOptimum | None = None,
) -> dict:
    """|a_star(R + delta) - a_star(R)| for delta = f R, f in ``factors``.

    Returns the differences and the ratios of consecutive differences;
    continuity is consistent with all ratios below 1.
    """
    r = problem.r
    if base is None:
        base = a_star(problem, BallSpec(R, r), opts)
    warm = (base.potential, base.result.minimizer)
    diffs = []
    for f in factors:
        opt = a_star(problem, BallSpec(R * (1.0 + f), r), opts, warm=warm)
        diffs.append(abs(opt.value - base.value))
    ratios = [b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(diffs, diffs[1:])]
    return {"R": R, "a_star": base.value, "deltas": [f * R for f in factors], "diffs": diffs, "ratios": ratios}


def find_zero_radius(
    problem: ProblemSpec,
    R_max: float,
    opts: SolverOptions | None = None,
    zero_tol: float = ZERO_TOL,
    max_iterations: int = 200,
) -> float:
    """Radius R0 with |a_star(R0)| < zero_tol * |a_star(0)|, by bisection.

    Every evaluation is warm-started from the optimum at the current lower
    end of the bracket.  Raises ZeroRadiusBracketError unless
    a_star(0) > 0 > a_star(R_max).
    """
    r = problem.r
    lo_opt = a_star(problem, BallSpec(0.0, r), opts)
    a0 = lo_opt.value
    if not a0 > 0:
        raise ZeroRadiusBracketError(f"a_star(0) = {a0:.6g} is not positive")
    hi_opt = a_star(problem, BallSpec(R_max, r), opts, warm=(lo_opt.potential, lo_opt.result.minimizer))
    if not hi_opt.value < 0:
        raise ZeroRadiusBracketError(
            f"a_star(R_max={R_max:.6g}) = {hi_opt.value:.6g} is not negative; increase R_max"
        )
    lo, hi = 0.0, float(R_max)
    target = zero_tol * abs(a0)
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        opt = a_star(problem, BallSpec(mid, r), opts, warm=(lo_opt.potential, lo_opt.result.minimizer))
        if abs(opt.value) < target:
            return mid
        if opt.value > 0:
            lo, lo_opt = mid, opt
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    raise NormBracketError(f"bisection stalled at R in [{lo!r}, {hi!r}] without |a_star| < {target:.3g}")


def mu_set_function(problem: ProblemSpec, R: float, R0: float, opts: SolverOptions | None = None) -> float:
    """mu of the annulus between the balls of radii R0 <= R: equals -a_star(R)."""
    if R < R0:
        raise ValueError("R must be >= R0")
    return -a_star(problem, BallSpec(R, problem.r), opts).value


def sample_ball(grid: Grid, r: ExponentField, R: float, seed: int) -> GridFunction:
    """Random potential with Luxemburg norm uniform in [0, R]."""
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, grid.shape)
    n = luxemburg_norm(raw, r, grid=grid)
    radius = R * rng.uniform()
    return GridFunction(grid, raw * (radius / n) * (1.0 - 1e-12), dirichlet_zero=False)


def format_sweep_csv(rows: list[SweepRow]) -> str:
    """CSV with header R,a_star,converged,iterations,residual (LF line ends)."""
    lines = ["R,a_star,converged,iterations,residual"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    format(row.R, ".17g"),
                    format(row.a_star, ".17g"),
                    "true" if row.converged else "false",
                    str(row.iterations),
                    format(row.residual, ".17g"),
                ]
            )
        )
    return "\n".join(lines) + "\n"
