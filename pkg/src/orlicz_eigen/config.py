"""Run configuration: YAML text -> ProblemSpec, SolverOptions and command parameters.

Layout (defaults in brackets)::

    grid:   {dim: 3, nodes: 17, lower: 0.0, upper: 1.0}
            # or {shape: [n1, n2], lower: [a1, a2], upper: [b1, b2]}
    phi1:   {family: Power, p: 2.5}       # Power | LogPower (p, s) | PowerOverLog | Tabulated (samples)
    phi2:   {family: Power, p: 1.3}
    q1: 2.0                               # number or expression in x, y, z
    q2: "1.5 + 0.1*sin(pi*x)"
    m: 1.7
    r: 2.0
    V: 0.0                                # number | expression | {file: v.csv} | {random: {low, high}}
    seed: 0                               # [0]; the --seed flag overrides it
    solver: {restarts: 8, gtol: 1e-8, ...}
    family: {lambdas: ["A + 0.5", "B - 0.5"], tolerance: 1e-4}
    sweep:  {radii: [...] or radii_ref: [0, 0.5, 1, 2, 4], continuity_ref: [0.5, 2],
             zero_radius: false}
    norms:  {function: u.csv}

Expressions are evaluated node-wise by a restricted evaluator: numbers,
``+ - * / **``, the coordinates ``x, y, z``, the constants ``pi, e`` and the
functions listed in ``FUNCTIONS``.  Radii given as ``radii_ref`` are
multiples of the L^{r(x)} norm of the constant lambda_m.
"""
from __future__ import annotations

import ast
import hashlib
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .eigensolve import SolverOptions
from .functionals import ProblemSpec
from .grid import Grid, GridFunction, read_csv
from .lebesgue import ExponentField
from .young import YoungFunctionSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "evaluate_expression", "FUNCTIONS"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "min": np.minimum,
    "max": np.maximum,
}
CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate_expression(text: str, names: dict[str, Any]):
    """Evaluate an arithmetic expression with the given variable bindings."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            raise ConfigError(f"unknown name {node.id!r} in expression {text!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fn = FUNCTIONS.get(node.func.id)
            if fn is None:
                raise ConfigError(f"unknown function {node.func.id!r} in expression {text!r}")
            return fn(*[ev(a) for a in node.args])
        raise ConfigError(f"unsupported syntax in expression {text!r}")

    with np.errstate(all="raise"):
        try:
            return ev(tree)
        except FloatingPointError as exc:
            raise ConfigError(f"expression {text!r} is not finite on the grid ({exc})") from None


@dataclass
class RunConfig:
    problem: ProblemSpec
    solver: SolverOptions
    seed: int
    raw: dict
    config_hash: str
    family: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def summary(self) -> dict:
        return {"config_sha256": self.config_hash, "seed": self.seed, "solver": self.solver.to_dict()}


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    if key not in d:
        raise ConfigError(f"missing required field '{where + '.' if where != '<root>' else ''}{key}'")
    return d[key]


def _grid(d) -> Grid:
    if not isinstance(d, dict):
        raise ConfigError("grid: expected a mapping")
    try:
        if "shape" in d:
            shape = [int(n) for n in d["shape"]]
            lower = d.get("lower", 0.0)
            upper = d.get("upper", 1.0)
            lower = [float(lower)] * len(shape) if np.isscalar(lower) else [float(a) for a in lower]
            upper = [float(upper)] * len(shape) if np.isscalar(upper) else [float(b) for b in upper]
            return Grid(tuple(shape), tuple(lower), tuple(upper))
        dim = int(_require(d, "dim", "grid"))
        nodes = int(_require(d, "nodes", "grid"))
        return Grid.box(dim, nodes, float(d.get("lower", 0.0)), float(d.get("upper", 1.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"grid: {exc}") from None


def _young(d, name: str) -> YoungFunctionSpec:
    if not isinstance(d, dict):
        raise ConfigError(f"{name}: expected a mapping with 'family'")
    family = _require(d, "family", name)
    try:
        return YoungFunctionSpec.from_dict(d)
    except KeyError as exc:
        raise ConfigError(f"missing required field '{name}.{exc.args[0]}'") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} ({family}): {exc}") from None


def _coords(grid: Grid) -> dict:
    return dict(zip(("x", "y", "z"), grid.coordinates()))


def _field(value, grid: Grid, name: str) -> np.ndarray:
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"{name}: expected a number or an expression")
    if isinstance(value, (int, float)):
        return np.full(grid.shape, float(value))
    if isinstance(value, str):
        out = evaluate_expression(value, _coords(grid))
        return np.broadcast_to(np.asarray(out, dtype=float), grid.shape).copy()
    raise ConfigError(f"{name}: expected a number or an expression, got {type(value).__name__}")


def _exponent(value, grid: Grid, name: str) -> ExponentField:
    try:
        return ExponentField(_field(value, grid, name))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _potential(value, grid: Grid, seed: int, base: Path) -> GridFunction:
    if isinstance(value, dict):
        if "file" in value:
            path = base / str(value["file"])
            try:
                return read_csv(path, grid, dirichlet_zero=False)
            except ValueError as exc:
                raise ConfigError(f"V.file: {exc}") from None
        if "random" in value:
            spec = value["random"] or {}
            low, high = float(spec.get("low", -1.0)), float(spec.get("high", 1.0))
            rng = np.random.default_rng(seed)
            return GridFunction(grid, rng.uniform(low, high, grid.shape), dirichlet_zero=False)
        raise ConfigError("V: mapping must contain 'file' or 'random'")
    return GridFunction(grid, _field(value, grid, "V"), dirichlet_zero=False)


def _solver(d, seed: int) -> SolverOptions:
    d = dict(d or {})
    if not isinstance(d, dict):
        raise ConfigError("solver: expected a mapping")
    known = set(SolverOptions.__dataclass_fields__)
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"solver: unknown option(s) {', '.join(unknown)}")
    d["seed"] = seed
    try:
        return SolverOptions(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from None


def parse_config(raw: dict, seed: int | None = None, base_dir: Path | str = ".", text: str | None = None) -> RunConfig:
    """Build a RunConfig from an already-loaded mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a mapping")
    base_dir = Path(base_dir)
    seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    grid = _grid(_require(raw, "grid", "<root>"))
    phi1 = _young(_require(raw, "phi1", "<root>"), "phi1")
    phi2 = _young(_require(raw, "phi2", "<root>"), "phi2")
    fields = {k: _exponent(_require(raw, k, "<root>"), grid, k) for k in ("q1", "q2", "m", "r")}
    V = _potential(raw.get("V", 0.0), grid, seed, base_dir)
    problem = ProblemSpec(grid, phi1, phi2, fields["q1"], fields["q2"], fields["m"], fields["r"], V)
    solver = _solver(raw.get("solver"), seed)
    if text is None:
        text = yaml.safe_dump(raw, sort_keys=True)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    sections = {}
    for key in ("family", "sweep", "norms"):
        sec = raw.get(key) or {}
        if not isinstance(sec, dict):
            raise ConfigError(f"{key}: expected a mapping")
        sections[key] = sec
    return RunConfig(problem, solver, seed, raw, digest, base_dir=base_dir, **sections)


def load_config(path, seed: int | None = None) -> RunConfig:
    """Read and parse a YAML config file (OSError propagates for I/O failures)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{where}") from None
    return parse_config(raw, seed=seed, base_dir=path.parent, text=text)
