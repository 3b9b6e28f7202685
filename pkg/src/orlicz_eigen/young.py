"""Young functions generated by odd increasing homeomorphisms ``phi``.

Each family is described by a :class:`YoungFunctionSpec`.  The module
evaluates ``phi``, its derivative, the N-function ``Phi(t) = int_0^t phi``,
the inverse ``phi^{-1}``, the complementary function ``Phi*`` and the growth
indices ``inf/sup t phi(t) / Phi(t)``.  Everything is vectorised over numpy
arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "YoungFunctionSpec",
    "ConditionReport",
    "ConvexityCheck",
    "QuadratureError",
    "phi_eval",
    "phi_prime",
    "phi_capital",
    "phi_inverse",
    "phi_star",
    "indices",
    "estimate_delta2",
    "check_sqrt_convexity",
    "check_conditions",
    "young_gap",
]

FAMILIES = ("power", "logpower", "poweroverlog", "tabulated")

# log grid used for every sampled sup/inf over t > 0
LOG_GRID = np.geomspace(1e-6, 1e6, 4096)
MIN_TABULATED_SAMPLES = 4

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS
# coarser rule used only as a self-check on scalar calls
_GL_NODES_CHK, _GL_WEIGHTS_CHK = np.polynomial.legendre.leggauss(48)
_GL_NODES_CHK = 0.5 * (_GL_NODES_CHK + 1.0)
_GL_WEIGHTS_CHK = 0.5 * _GL_WEIGHTS_CHK
# y -> y**_POW_SUB flattens the power singularity of phi at the origin
_POW_SUB = 8


class QuadratureError(RuntimeError):
    """Raised when two quadrature rules disagree beyond the tolerance."""


@dataclass(frozen=True)
class YoungFunctionSpec:
    """One of the ``phi`` families.

    ``power``:        phi(t) = p |t|^{p-2} t,                 p > 1
    ``logpower``:     phi(t) = log(1 + |t|^s) |t|^{p-2} t,    p > 1, s >= 1
    ``poweroverlog``: phi(t) = |t|^{p-2} t / log(1 + |t|),    p > 2
    ``tabulated``:    piecewise linear through (0, 0) and the samples,
                      extended linearly past the last sample.
    """

    family: str
    p: float = 2.0
    s: float = 2.0
    samples: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ValueError(f"unknown phi family {self.family!r}; expected one of {FAMILIES}")
        if fam == "power" and not self.p > 1:
            raise ValueError(f"power family requires p > 1, got p={self.p}")
        if fam == "logpower" and not (self.p > 1 and self.s >= 1):
            raise ValueError(f"logpower family requires p > 1 and s >= 1, got p={self.p}, s={self.s}")
        if fam == "poweroverlog" and not self.p > 2:
            raise ValueError(f"poweroverlog family requires p > 2, got p={self.p}")
        if fam == "tabulated":
            pts = tuple((float(a), float(b)) for a, b in self.samples)
            if len(pts) < 1:
                raise ValueError("tabulated family needs at least one sample")
            ts = np.array([a for a, _ in pts])
            vs = np.array([b for _, b in pts])
            if ts[0] <= 0 or vs[0] <= 0:
                raise ValueError("tabulated samples must start at positive t and phi(t)")
            if np.any(np.diff(ts) <= 0) or np.any(np.diff(vs) <= 0):
                raise ValueError("tabulated samples must be strictly increasing in t and phi(t)")
            object.__setattr__(self, "samples", pts)

    @classmethod
    def power(cls, p: float) -> "YoungFunctionSpec":
        return cls("power", p=p)

    @classmethod
    def logpower(cls, p: float, s: float) -> "YoungFunctionSpec":
        return cls("logpower", p=p, s=s)

    @classmethod
    def poweroverlog(cls, p: float) -> "YoungFunctionSpec":
        return cls("poweroverlog", p=p)

    @classmethod
    def tabulated(cls, samples: Sequence[tuple[float, float]]) -> "YoungFunctionSpec":
        return cls("tabulated", samples=tuple(samples))

    def to_dict(self) -> dict[str, Any]:
        if self.family == "power":
            return {"family": "power", "p": self.p}
        if self.family == "logpower":
            return {"family": "logpower", "p": self.p, "s": self.s}
        if self.family == "poweroverlog":
            return {"family": "poweroverlog", "p": self.p}
        return {"family": "tabulated", "samples": [list(pt) for pt in self.samples]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "YoungFunctionSpec":
        if "family" not in data:
            raise KeyError("family")
        fam = str(data["family"]).lower()
        if fam == "power":
            return cls.power(float(data["p"]))
        if fam == "logpower":
            return cls.logpower(float(data["p"]), float(data["s"]))
        if fam == "poweroverlog":
            return cls.poweroverlog(float(data["p"]))
        if fam == "tabulated":
            return cls.tabulated([tuple(pt) for pt in data["samples"]])
        raise ValueError(f"unknown phi family {fam!r}")

    # knots of the tabulated phi, with (0, 0) prepended
    def _knots(self):
        ts = np.concatenate([[0.0], [a for a, _ in self.samples]])
        vs = np.concatenate([[0.0], [b for _, b in self.samples]])
        slopes = np.diff(vs) / np.diff(ts)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(ts))])
        return ts, vs, slopes, cum


# ---------------------------------------------------------------------------
# phi and its derivative


def _phi_abs(spec: YoungFunctionSpec, a: np.ndarray) -> np.ndarray:
    """phi(|t|) for a >= 0."""
    p = spec.p
    fam = spec.family
    if fam == "power":
        return p * a ** (p - 1.0)
    if fam == "logpower":
        return np.log1p(a**spec.s) * a ** (p - 1.0)
    if fam == "poweroverlog":
        out = np.empty_like(a)
        small = a < 1e-12
        big = ~small
        out[big] = a[big] ** (p - 1.0) / np.log1p(a[big])
        # phi(t) ~ t^{p-2} as t -> 0, and 0 at the origin
        out[small] = a[small] ** (p - 2.0)
        return out
    ts, vs, slopes, _ = spec._knots()
    k = np.clip(np.searchsorted(ts, a, side="right") - 1, 0, len(slopes) - 1)
    return vs[k] + slopes[k] * (a - ts[k])


def _phi_prime_abs(spec: YoungFunctionSpec, a: np.ndarray) -> np.ndarray:
    p = spec.p
    fam = spec.family
    if fam == "power":
        with np.errstate(divide="ignore"):
            return p * (p - 1.0) * a ** (p - 2.0)
    if fam == "logpower":
        s = spec.s
        with np.errstate(divide="ignore", invalid="ignore"):
            return (s * a ** (s - 1.0) / (1.0 + a**s)) * a ** (p - 1.0) + (p - 1.0) * a ** (
                p - 2.0
            ) * np.log1p(a**s)
    if fam == "poweroverlog":
        out = np.empty_like(a)
        small = a < 1e-12
        big = ~small
        ab = a[big]
        lg = np.log1p(ab)
        out[big] = (p - 1.0) * ab ** (p - 2.0) / lg - ab ** (p - 1.0) / ((1.0 + ab) * lg * lg)
        with np.errstate(divide="ignore"):
            out[small] = (p - 2.0) * a[small] ** (p - 3.0)
        return out
    ts, _, slopes, _ = spec._knots()
    k = np.clip(np.searchsorted(ts, a, side="right") - 1, 0, len(slopes) - 1)
    return slopes[k]


def phi_eval(spec: YoungFunctionSpec, t):
    """phi(t); odd, with phi(0) = 0."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.sign(t) * _phi_abs(spec, a)
    out = np.where(a == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def phi_prime(spec: YoungFunctionSpec, t):
    """phi'(t) (even).  Infinite at 0 for power-like growth below 2."""
    t = np.asarray(t, dtype=float)
    out = _phi_prime_abs(spec, np.abs(t))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Phi = int_0^t phi


def _integrate_from_zero(f, a: np.ndarray, nodes=_GL_NODES, weights=_GL_WEIGHTS) -> np.ndarray:
    """int_0^a f(s) ds for a >= 0, f power-like at 0.

    [0, min(a, 1)] uses s = tau * y**8, [1, a] uses s = exp(z); both with a
    fixed Gauss-Legendre rule so the result is a smooth function of ``a``.
    """
    a = np.asarray(a, dtype=float)
    shape = a.shape
    a = a.ravel()
    tau = np.minimum(a, 1.0)
    y = nodes
    s = tau[:, None] * y[None, :] ** _POW_SUB
    jac = _POW_SUB * tau[:, None] * y[None, :] ** (_POW_SUB - 1)
    vals = f(s) * jac
    out = vals @ weights
    big = a > 1.0
    if np.any(big):
        length = np.log(a[big])
        z = length[:, None] * nodes[None, :]
        ez = np.exp(z)
        out[big] += (f(ez) * ez * length[:, None]) @ weights
    return out.reshape(shape)


def _phi_capital_abs(spec: YoungFunctionSpec, a: np.ndarray) -> np.ndarray:
    fam = spec.family
    if fam == "power":
        return a**spec.p
    if fam == "tabulated":
        ts, vs, slopes, cum = spec._knots()
        k = np.clip(np.searchsorted(ts, a, side="right") - 1, 0, len(slopes) - 1)
        d = a - ts[k]
        return cum[k] + vs[k] * d + 0.5 * slopes[k] * d * d
    return _integrate_from_zero(lambda s: _phi_abs(spec, s), a)


def phi_capital(spec: YoungFunctionSpec, t, check: bool | None = None, atol: float = 1e-10):
    """Phi(t) = int_0^|t| phi(s) ds.

    Closed form for ``power`` and ``tabulated``; otherwise a composite
    Gauss rule.  Scalar calls (or ``check=True``) compare against a coarser
    rule and raise :class:`QuadratureError` if they differ by more than
    ``atol * max(1, Phi)``.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = _phi_capital_abs(spec, a)
    if check is None:
        check = t.ndim == 0
    if check and spec.family in ("logpower", "poweroverlog"):
        alt = _integrate_from_zero(
            lambda s: _phi_abs(spec, s), a, _GL_NODES_CHK, _GL_WEIGHTS_CHK
        )
        err = np.max(np.abs(alt - out) / np.maximum(1.0, np.abs(out)), initial=0.0)
        if not err <= atol:
            raise QuadratureError(f"Phi quadrature did not converge: achieved {err:.3e} > {atol:.1e}")
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# inverse and complementary function


def _phi_inverse_abs(spec: YoungFunctionSpec, s: np.ndarray) -> np.ndarray:
    fam = spec.family
    if fam == "power":
        return (s / spec.p) ** (1.0 / (spec.p - 1.0))
    if fam == "tabulated":
        ts, vs, slopes, _ = spec._knots()
        k = np.clip(np.searchsorted(vs, s, side="right") - 1, 0, len(slopes) - 1)
        return ts[k] + (s - vs[k]) / slopes[k]

    out = np.zeros_like(s, dtype=float)
    pos = s > 0
    if np.any(pos):
        out[pos] = _solve_log_newton(spec, s[pos])
    return out


def _solve_log_newton(spec: YoungFunctionSpec, target: np.ndarray) -> np.ndarray:
    """Vectorised phi(t) = target for t > 0, as a root of log phi(e^y) - log target.

    Each element keeps a bracket [lo, hi] in y = log t; Newton steps (whose
    slope t phi'(t) / phi(t) stays within the index range) fall back to
    bisection whenever they leave the bracket.
    """
    logt = np.log(target)

    def f(y):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.log(_phi_abs(spec, np.exp(y))) - logt

    lo = np.full(target.shape, -1.0)
    hi = np.full(target.shape, 1.0)
    for _ in range(64):
        low = f(hi) < 0
        if not low.any():
            break
        lo[low], hi[low] = hi[low], 2.0 * hi[low]
    for _ in range(64):
        high = f(lo) > 0
        if not high.any():
            break
        hi[high], lo[high] = lo[high], 2.0 * lo[high]
    y = 0.5 * (lo + hi)
    active = np.arange(y.size)
    for _ in range(200):
        ya, la, ha = y[active], lo[active], hi[active]
        with np.errstate(over="ignore", divide="ignore"):
            fy = np.log(_phi_abs(spec, np.exp(ya))) - logt[active]
        neg = fy < 0
        la = np.where(neg, ya, la)
        ha = np.where(neg, ha, ya)
        t = np.exp(ya)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            slope = t * _phi_prime_abs(spec, t) / _phi_abs(spec, t)
            y_new = ya - fy / slope
        bad = ~np.isfinite(y_new) | (y_new < la) | (y_new > ha)
        y_new = np.where(bad, 0.5 * (la + ha), y_new)
        done = (np.abs(y_new - ya) <= 2 * np.finfo(float).eps * np.maximum(1.0, np.abs(y_new))) | (fy == 0)
        y[active], lo[active], hi[active] = y_new, la, ha
        active = active[~done]
        if active.size == 0:
            break
    return np.exp(y)


def phi_inverse(spec: YoungFunctionSpec, s):
    """phi^{-1}(s) by bracketing and Brent on the strictly increasing phi."""
    s = np.asarray(s, dtype=float)
    out = np.sign(s) * _phi_inverse_abs(spec, np.abs(s))
    return out if out.ndim else float(out)


def phi_star(spec: YoungFunctionSpec, t):
    """Complementary function Phi*(t) = int_0^|t| phi^{-1}(s) ds, by quadrature."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    if spec.family == "tabulated":
        # phi^{-1} is piecewise linear with knots at the sampled values
        ts, vs, slopes, _ = spec._knots()
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ts[1:] + ts[:-1]) * np.diff(vs))])
        k = np.clip(np.searchsorted(vs, a, side="right") - 1, 0, len(slopes) - 1)
        d = a - vs[k]
        out = cum[k] + ts[k] * d + 0.5 * d * d / slopes[k]
    else:
        out = _integrate_from_zero(lambda x: _phi_inverse_abs(spec, x), a)
    return out if out.ndim else float(out)


def young_gap(spec: YoungFunctionSpec, s, t):
    """Phi(s) + Phi*(t) - s t, which Young's inequality says is >= 0."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return phi_capital(spec, s, check=False) + phi_star(spec, t) - s * t


# ---------------------------------------------------------------------------
# indices and structural checks


def indices(spec: YoungFunctionSpec) -> tuple[float, float]:
    """(inf, sup) over t > 0 of t phi(t) / Phi(t).

    Closed forms for the analytic families; ``tabulated`` samples the ratio
    on a log grid over [1e-6, 1e6] (an approximation of the true inf/sup).
    """
    fam = spec.family
    if fam == "power":
        return (spec.p, spec.p)
    if fam == "logpower":
        return (spec.p, spec.p + spec.s)
    if fam == "poweroverlog":
        return (spec.p - 1.0, spec.p)
    if len(spec.samples) < MIN_TABULATED_SAMPLES:
        raise ValueError(
            f"tabulated indices need at least {MIN_TABULATED_SAMPLES} samples, got {len(spec.samples)}"
        )
    ratio = index_ratio(spec, LOG_GRID)
    return (float(ratio.min()), float(ratio.max()))


def index_ratio(spec: YoungFunctionSpec, t) -> np.ndarray:
    """t phi(t) / Phi(t) for t > 0."""
    t = np.asarray(t, dtype=float)
    return t * _phi_abs(spec, t) / _phi_capital_abs(spec, t)


def estimate_delta2(spec: YoungFunctionSpec, t=None) -> float:
    """Sampled sup of Phi(2t) / Phi(t) (the Delta_2 constant)."""
    t = LOG_GRID if t is None else np.asarray(t, dtype=float)
    return float(np.max(_phi_capital_abs(spec, 2.0 * t) / _phi_capital_abs(spec, t)))


@dataclass(frozen=True)
class ConvexityCheck:
    ok: bool
    violation: tuple[float, float, float] | None = None

    def __bool__(self):
        return self.ok


def check_sqrt_convexity(spec: YoungFunctionSpec, t=None, rtol: float = 1e-9) -> ConvexityCheck:
    """Midpoint convexity of t -> Phi(sqrt t) on consecutive sampled triples."""
    grid = np.geomspace(1e-6, 1e6, 2049) if t is None else np.sort(np.asarray(t, dtype=float))
    a, b = grid[:-2], grid[2:]
    mid = 0.5 * (a + b)
    g = lambda x: _phi_capital_abs(spec, np.sqrt(x))
    lhs = g(mid)
    rhs = 0.5 * (g(a) + g(b))
    bad = np.nonzero(lhs > rhs * (1.0 + rtol))[0]
    if bad.size:
        i = bad[0]
        return ConvexityCheck(False, (float(a[i]), float(mid[i]), float(b[i])))
    return ConvexityCheck(True)


# ---------------------------------------------------------------------------
# structural conditions on a problem instance

CHAIN_NAMES = (
    "1",
    "(phi2)_0",
    "(phi2)^0",
    "q2-",
    "q2+",
    "m-",
    "m+",
    "q1-",
    "q1+",
    "(phi1)_0",
    "(phi1)^0",
    "N",
)
# relation between consecutive chain entries
CHAIN_RELATIONS = ("<", "<=", "<", "<=", "<=", "<=", "<=", "<=", "<", "<=", "<")


@dataclass(frozen=True)
class ConditionReport:
    chain_values: tuple[float, ...]
    pass_2: bool
    pass_3: bool
    pass_4: bool
    sobolev_bound: float
    dimension: int
    relaxed_mode: bool
    first_violation: str | None = None
    r_margin: float = float("nan")

    def to_dict(self) -> dict[str, Any]:
        return {
            "chain": {name: _finite_or_str(v) for name, v in zip(CHAIN_NAMES, self.chain_values)},
            "pass_2": self.pass_2,
            "pass_3": self.pass_3,
            "pass_4": self.pass_4,
            "sobolev_bound": _finite_or_str(self.sobolev_bound),
            "dimension": self.dimension,
            "relaxed_mode": self.relaxed_mode,
            "first_violation": self.first_violation,
        }

    def render(self) -> str:
        lines = ["growth chain (pass_2):"]
        vals = self.chain_values
        for i, rel in enumerate(CHAIN_RELATIONS):
            ok = vals[i] < vals[i + 1] if rel == "<" else vals[i] <= vals[i + 1]
            lines.append(
                f"  {CHAIN_NAMES[i]} = {vals[i]:.6g} {rel} {CHAIN_NAMES[i + 1]} = {vals[i + 1]:.6g}"
                f"  [{'ok' if ok else 'FAIL'}]"
            )
        lines.append(
            f"embedding bound (pass_3): q1+ = {vals[8]:.6g} < N (phi2)_0 / (N - (phi2)_0) = "
            f"{self.sobolev_bound:.6g}  [{'ok' if self.pass_3 else 'FAIL'}]"
        )
        lines.append(
            f"potential exponent (pass_4): min_x (r(x) - N/m-) = {self.r_margin:.6g} > 0  [{'ok' if self.pass_4 else 'FAIL'}]"
        )
        lines.append(f"relaxed_mode: {self.relaxed_mode}")
        return "\n".join(lines)


def _finite_or_str(v):
    return float(v) if np.isfinite(v) else str(v)


def _field_range(field) -> tuple[float, float]:
    lo = getattr(field, "lo", None)
    if lo is not None:
        return float(field.lo), float(field.hi)
    arr = np.asarray(field, dtype=float)
    return float(arr.min()), float(arr.max())


def check_conditions(spec1, spec2, q1, q2, m, r, N: int) -> ConditionReport:
    """Evaluate the growth chain (pass_2), the Sobolev bound on q1+ (pass_3) and r(x) > N/m- (pass_4)."""
    lo1, hi1 = indices(spec1)
    lo2, hi2 = indices(spec2)
    q1lo, q1hi = _field_range(q1)
    q2lo, q2hi = _field_range(q2)
    mlo, mhi = _field_range(m)
    chain = (1.0, lo2, hi2, q2lo, q2hi, mlo, mhi, q1lo, q1hi, lo1, hi1, float(N))
    first = None
    for i, rel in enumerate(CHAIN_RELATIONS):
        ok = chain[i] < chain[i + 1] if rel == "<" else chain[i] <= chain[i + 1]
        if not ok:
            first = f"{CHAIN_NAMES[i]} {rel} {CHAIN_NAMES[i + 1]}"
            break
    pass_2 = first is None
    sob = N * lo2 / (N - lo2) if N > lo2 else float("inf")
    pass_3 = q1hi < sob
    r_vals = np.asarray(getattr(r, "values", r), dtype=float)
    margin = float(np.min(r_vals - N / mlo))
    pass_4 = margin > 0
    if first is None and not pass_3:
        first = "q1+ < N (phi2)_0 / (N - (phi2)_0)"
    if first is None and not pass_4:
        first = "r(x) > N / m-"
    return ConditionReport(
        chain_values=chain,
        pass_2=pass_2,
        pass_3=pass_3,
        pass_4=pass_4,
        sobolev_bound=sob,
        dimension=int(N),
        relaxed_mode=not (pass_2 and pass_3 and pass_4),
        first_violation=first,
        r_margin=margin,
    )
