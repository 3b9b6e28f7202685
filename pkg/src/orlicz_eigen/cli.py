"""Command-line interface: ``orlicz-eigen {check,eig,family,sweep,indices,norms} --config FILE``.

Every command builds a JSON-serialisable payload, prints it (``check``
prints the rendered condition report instead) and, with ``--out DIR``,
writes it together with any CSV tables to DIR.  Output depends only on the
config text and the seed.

Exit codes: 0 success, 1 validation failure (bad config, failed structural
conditions in ``check``), 2 solver non-convergence, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, evaluate_expression, load_config
from .eigensolve import EigenResult, lambda_m, minimize_rayleigh_A, minimize_rayleigh_B, solve_T
from .functionals import I
from .grid import GridFunction, format_csv, gradient_magnitude, read_csv
from .lebesgue import luxemburg_norm, modular, orlicz_luxemburg_norm, orlicz_modular
from .potopt import (
    ZERO_TOL,
    ZeroRadiusBracketError,
    a_star,
    a_star_sweep,
    BallSpec,
    continuity_probe,
    find_zero_radius,
    format_sweep_csv,
    sweep_violations,
)
from .young import check_sqrt_convexity, estimate_delta2, indices

__all__ = ["main", "cmd_check", "cmd_eig", "cmd_family", "cmd_sweep", "cmd_indices", "cmd_norms", "CommandOutput"]

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

CLASS_EIGENVALUE = "eigenvalue"
CLASS_NOT_CONFIRMED = "not confirmed: no nontrivial critical point with T < 0 found"
CLASS_NONE_BELOW = "no nontrivial critical point found"
CLASS_UNEXPECTED = "nontrivial critical point found below B"
CLASS_GAP = "unresolved: lambda lies in [B, A], where no classification is claimed"


class CommandOutput:
    """Payload plus extra files (name -> text) and the exit code."""

    def __init__(self, payload: dict, code: int = EXIT_OK, files: dict[str, str] | None = None, text: str | None = None):
        self.payload = payload
        self.code = code
        self.files = files or {}
        self.text = text


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": cfg.summary(),
        "conditions": cfg.problem.condition_report.to_dict(),
    }


# ---------------------------------------------------------------------------


def cmd_check(cfg: RunConfig) -> CommandOutput:
    rep = cfg.problem.condition_report
    payload = _header(cfg, "check")
    ok = not rep.relaxed_mode
    payload["all_pass"] = ok
    text = rep.render()
    if not ok:
        failed = [n for n, p in (("pass_2", rep.pass_2), ("pass_3", rep.pass_3), ("pass_4", rep.pass_4)) if not p]
        text += f"\nFAILED: {', '.join(failed)}"
        if rep.first_violation:
            text += f"; first violated inequality: {rep.first_violation}"
    return CommandOutput(payload, EXIT_OK if ok else EXIT_VALIDATION, text=text)


def _solve_A_B(cfg: RunConfig) -> tuple[EigenResult, EigenResult]:
    ra = minimize_rayleigh_A(cfg.problem, cfg.solver)
    rb = minimize_rayleigh_B(cfg.problem, cfg.solver, initial=[ra.minimizer])
    return ra, rb


def cmd_eig(cfg: RunConfig, emit_minimizer: bool = False) -> CommandOutput:
    ra, rb = _solve_A_B(cfg)
    rm = lambda_m(cfg.problem, cfg.solver)
    payload = _header(cfg, "eig")
    payload.update(
        {
            "A": ra.summary(),
            "B": rb.summary(),
            "B_le_A": bool(rb.value <= ra.value + 1e-6),
            "lambda_m": rm.summary(),
        }
    )
    files = {}
    if emit_minimizer:
        files["minimizer_A.csv"] = format_csv(ra.minimizer)
        files["minimizer_B.csv"] = format_csv(rb.minimizer)
    code = EXIT_OK if (ra.converged and rb.converged and rm.converged) else EXIT_NONCONVERGED
    return CommandOutput(payload, code, files)


def _lambdas(cfg: RunConfig, A: float, B: float) -> list[float]:
    raw = cfg.family.get("lambdas")
    if not raw:
        raise ConfigError("missing required field 'family.lambdas'")
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            out.append(float(item))
        elif isinstance(item, str):
            out.append(float(evaluate_expression(item, {"A": A, "B": B})))
        else:
            raise ConfigError(f"family.lambdas[{i}]: expected a number or an expression in A and B")
    return out


def classify(lam: float, A: float, B: float, res: EigenResult, tol: float) -> tuple[str, str]:
    """(region, classification) of lambda given a T-minimisation result."""
    if lam > A:
        ok = not res.trivial and res.value < 0 and res.residual < tol
        return "above_A", CLASS_EIGENVALUE if ok else CLASS_NOT_CONFIRMED
    if lam < B:
        return "below_B", CLASS_NONE_BELOW if res.trivial else CLASS_UNEXPECTED
    return "gap", CLASS_GAP


def cmd_family(cfg: RunConfig, emit_minimizer: bool = False) -> CommandOutput:
    tol = float(cfg.family.get("tolerance", 1e-4))
    ra, rb = _solve_A_B(cfg)
    A, B = ra.value, rb.value
    lams = _lambdas(cfg, A, B)
    rows = []
    files = {}
    converged = ra.converged and rb.converged
    lines = ["lambda,region,classification,T_min,residual,trivial"]
    for i, lam in enumerate(lams):
        if B <= lam <= A:
            rows.append({"lambda": lam, "region": "gap", "classification": CLASS_GAP})
            lines.append(f"{lam:.17g},gap,\"{CLASS_GAP}\",,,")
            continue
        # above A the A-minimizer lies on a ray where T < 0; it seeds the first restart
        initial = [ra.minimizer] if lam > A else None
        res = solve_T(cfg.problem, lam, cfg.solver, initial=initial)
        converged = converged and res.converged
        region, label = classify(lam, A, B, res, tol)
        rows.append(
            {
                "lambda": lam,
                "region": region,
                "classification": label,
                "T_min": res.value,
                "residual": res.residual,
                "trivial": res.trivial,
                "converged": res.converged,
                "restart_values": res.restart_values,
            }
        )
        lines.append(
            f"{lam:.17g},{region},\"{label}\",{res.value:.17g},{res.residual:.17g},{'true' if res.trivial else 'false'}"
        )
        if emit_minimizer and not res.trivial:
            files[f"family_u_{i:03d}.csv"] = format_csv(res.minimizer)
    payload = _header(cfg, "family")
    payload.update({"A": ra.summary(), "B": rb.summary(), "tolerance": tol, "rows": rows})
    files["family.csv"] = "\n".join(lines) + "\n"
    return CommandOutput(payload, EXIT_OK if converged else EXIT_NONCONVERGED, files)


def _homogeneous(cfg: RunConfig) -> bool:
    p = cfg.problem
    q = p.q1.values
    return p.q1.is_constant and np.array_equal(q, p.q2.values) and np.array_equal(q, p.m.values)


def cmd_sweep(cfg: RunConfig, emit_minimizer: bool = False) -> CommandOutput:
    sw = cfg.sweep
    problem = problem_template = cfg.problem.with_potential(0.0)
    payload = _header(cfg, "sweep")
    R_ref = None
    needs_ref = "radii_ref" in sw or "continuity_ref" in sw
    if needs_ref:
        rm = lambda_m(problem, cfg.solver)
        R_ref = luxemburg_norm(GridFunction.constant(problem.grid, rm.value), problem.r)
        payload["lambda_m"] = rm.summary()
        payload["R_ref"] = R_ref
    if "radii" in sw:
        radii = [float(R) for R in sw["radii"]]
    elif "radii_ref" in sw:
        radii = [float(c) * R_ref for c in sw["radii_ref"]]
    else:
        raise ConfigError("missing required field 'sweep.radii' (or 'sweep.radii_ref')")
    if not radii:
        raise ConfigError("sweep.radii: empty list")
    try:
        rows = a_star_sweep(problem_template, radii, opts=cfg.solver)
    except ValueError as exc:
        raise ConfigError(f"sweep.radii: {exc}") from None
    tol = 2 * cfg.solver.gtol
    viol = sweep_violations(rows, tol)
    payload["rows"] = [
        {"R": r.R, "a_star": r.a_star, "converged": r.converged, "iterations": r.iterations, "residual": r.residual}
        for r in rows
    ]
    payload["monotone"] = {"non_increasing": not viol, "violations": viol, "tolerance": tol}
    files = {"sweep.csv": format_sweep_csv(rows)}

    probes = [float(R) for R in sw.get("continuity", [])]
    probes += [float(c) * R_ref for c in sw.get("continuity_ref", [])]
    table = []
    for R in probes:
        base = a_star(problem_template, BallSpec(R, problem.r), cfg.solver)
        table.append(continuity_probe(problem_template, R, cfg.solver, base=base))
    payload["continuity"] = table

    R0 = None
    if sw.get("zero_radius"):
        R_max = float(sw.get("R_max", max(radii)))
        R0 = find_zero_radius(problem_template, R_max, cfg.solver)
        payload["zero_radius"] = {"R0": R0, "R_max": R_max, "relative_tolerance": ZERO_TOL}

    homog = _homogeneous(cfg)
    extra = ["R,mu,decrement,half_delta_R"]
    for i, r in enumerate(rows):
        mu = "" if R0 is None or r.R < R0 else format(-r.a_star, ".17g")
        dec = half = ""
        if i > 0:
            dec = format(rows[i - 1].a_star - r.a_star, ".17g")
            if homog:
                half = format(0.5 * (r.R - rows[i - 1].R), ".17g")
        extra.append(f"{r.R:.17g},{mu},{dec},{half}")
    files["sweep_extra.csv"] = "\n".join(extra) + "\n"
    if homog:
        payload["homogeneous_decrement"] = [
            {
                "R1": a.R,
                "R2": b.R,
                "decrement": a.a_star - b.a_star,
                "bound": 0.5 * (b.R - a.R),
                "holds": bool(a.a_star - b.a_star >= 0.5 * (b.R - a.R) - tol),
            }
            for a, b in zip(rows, rows[1:])
        ]
    if emit_minimizer:
        for i, r in enumerate(rows):
            files[f"v_star_{i:03d}.csv"] = format_csv(r.v_star)
    code = EXIT_OK if all(r.converged for r in rows) else EXIT_NONCONVERGED
    return CommandOutput(payload, code, files)


def cmd_indices(cfg: RunConfig) -> CommandOutput:
    payload = _header(cfg, "indices")
    for name in ("phi1", "phi2"):
        spec = getattr(cfg.problem, name)
        lo, hi = indices(spec)
        conv = check_sqrt_convexity(spec)
        payload[name] = {
            "spec": spec.to_dict(),
            "index_lower": lo,
            "index_upper": hi,
            "delta2_constant": estimate_delta2(spec),
            "sqrt_convex": bool(conv),
            "sqrt_convexity_violation": None if conv.violation is None else list(conv.violation),
        }
    return CommandOutput(payload)


def cmd_norms(cfg: RunConfig) -> CommandOutput:
    p = cfg.problem
    grid = p.grid
    one = GridFunction.constant(grid, 1.0)
    payload = _header(cfg, "norms")
    payload["volume"] = grid.volume
    payload["constant_one"] = {k: luxemburg_norm(one, getattr(p, k)) for k in ("q1", "q2", "m", "r")}
    payload["V"] = {"norm_r": luxemburg_norm(p.V, p.r), "modular_r": modular(p.V, p.r)}
    path = cfg.norms.get("function")
    if path:
        u = read_csv(cfg.base_dir / str(path), grid)
        g = gradient_magnitude(u)
        payload["function"] = {
            "file": str(path),
            "norm_q1": luxemburg_norm(u, p.q1),
            "norm_q2": luxemburg_norm(u, p.q2),
            "norm_m": luxemburg_norm(u, p.m),
            "I": I(p, u),
            "gradient_norm_phi1": orlicz_luxemburg_norm(g, p.phi1, grid),
            "gradient_norm_phi2": orlicz_luxemburg_norm(g, p.phi2, grid),
            "gradient_modular_phi1": orlicz_modular(g, p.phi1, grid),
            "gradient_modular_phi2": orlicz_modular(g, p.phi2, grid),
        }
    return CommandOutput(payload)


COMMANDS = {
    "check": lambda cfg, emit: cmd_check(cfg),
    "eig": cmd_eig,
    "family": cmd_family,
    "sweep": cmd_sweep,
    "indices": lambda cfg, emit: cmd_indices(cfg),
    "norms": lambda cfg, emit: cmd_norms(cfg),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orlicz-eigen", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--out", default=None, help="directory for JSON/CSV outputs")
    ap.add_argument("--emit-minimizer", action="store_true", help="also write minimizers / V* snapshots as CSV")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def _write_outputs(out: Path, command: str, result: CommandOutput) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{command}.json", "w", newline="\n") as fh:
        fh.write(dumps(result.payload))
    for name, text in sorted(result.files.items()):
        with open(out / name, "w", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed)
        result = COMMANDS[args.command](cfg, args.emit_minimizer)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ZeroRadiusBracketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ArithmeticError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    try:
        if args.out:
            _write_outputs(Path(args.out), args.command, result)
        sys.stdout.write(result.text + "\n" if result.text is not None else dumps(result.payload))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if result.code == EXIT_NONCONVERGED:
        print("warning: solver did not converge to tolerance", file=sys.stderr)
    return result.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
