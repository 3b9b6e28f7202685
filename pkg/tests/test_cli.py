import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from orlicz_eigen.cli import classify, dumps, main
from orlicz_eigen.config import ConfigError, evaluate_expression, load_config, parse_config
from orlicz_eigen.eigensolve import EigenResult

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "grid": {"dim": 1, "nodes": 17},
    "phi1": {"family": "Power", "p": 3},
    "phi2": {"family": "Power", "p": 2},
    "q1": 2.5,
    "q2": 2.0,
    "m": 2.2,
    "r": 2.0,
    "V": "sin(pi*x)",
    "solver": {"restarts": 2},
}


def write(tmp_path, raw, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw, sort_keys=False))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# --- expressions and configs -------------------------------------------------


def test_expression_evaluator():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate_expression("2 + sin(pi*x)**2", {"x": x}), 2 + np.sin(np.pi * x) ** 2)
    assert evaluate_expression("max(1, 3) - -2", {}) == 5.0
    for bad in ["__import__('os')", "x.real", "[1, 2]", "lambda: 1", "open('f')", "1 if x else 2", "True"]:
        with pytest.raises(ConfigError):
            evaluate_expression(bad, {"x": 1.0})
    with pytest.raises(ConfigError, match="unknown name"):
        evaluate_expression("y + 1", {"x": 1.0})
    with pytest.raises(ConfigError, match="not finite"):
        evaluate_expression("log(x)", {"x": np.zeros(3)})


def test_parse_config_fields():
    cfg = parse_config(dict(SMALL), seed=4)
    p = cfg.problem
    assert p.grid.shape == (17,) and cfg.seed == 4 and cfg.solver.seed == 4
    assert p.q1.is_constant and p.q1.lo == 2.5
    x = p.grid.coordinates()[0]
    np.testing.assert_allclose(p.V.values, np.sin(np.pi * x))
    assert len(cfg.config_hash) == 64


@pytest.mark.parametrize("missing", ["grid", "phi1", "q2", "r"])
def test_missing_field_message(missing):
    raw = {k: v for k, v in SMALL.items() if k != missing}
    with pytest.raises(ConfigError, match=f"missing required field '{missing}'"):
        parse_config(raw)


def test_config_errors():
    with pytest.raises(ConfigError, match="missing required field 'phi1.p'"):
        parse_config({**SMALL, "phi1": {"family": "Power"}})
    with pytest.raises(ConfigError, match="unknown option"):
        parse_config({**SMALL, "solver": {"restart": 3}})
    with pytest.raises(ConfigError):
        parse_config({**SMALL, "q1": "0.5 + x"})
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_random_potential_is_seeded():
    raw = {**SMALL, "V": {"random": {"low": -1, "high": 1}}}
    a, b, c = parse_config(raw, seed=1), parse_config(raw, seed=1), parse_config(raw, seed=2)
    np.testing.assert_array_equal(a.problem.V.values, b.problem.V.values)
    assert np.any(a.problem.V.values != c.problem.V.values)
    assert np.all(np.abs(a.problem.V.values) <= 1)


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.yaml")):
        cfg = load_config(path)
        assert cfg.problem.grid.size > 0


def test_invalid_yaml_reports_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("grid: {dim: 1\nphi1: [\n")
    with pytest.raises(ConfigError, match="line"):
        load_config(path)


# --- JSON and classification -------------------------------------------------


def test_dumps_is_canonical():
    text = dumps({"b": 1.0, "a": [np.float64(np.inf), np.nan, np.int64(3)], "c": np.array([1.5])})
    assert text.index('"a"') < text.index('"b"')
    data = json.loads(text)
    assert data["a"] == ["inf", "nan", 3] and data["c"] == [1.5]
    assert text.endswith("\n")


def test_classify_labels():
    def res(trivial, value=0.0):
        return EigenResult(value=value, minimizer=None, residual=0.0, converged=True, restarts_used=1,
                           iterations=0, condition_report=None, kind="T", lam=1.0, trivial=trivial)

    assert classify(10.0, 5.0, 3.0, res(False, -1.0), 1e-6)[1] == "eigenvalue"
    assert classify(10.0, 5.0, 3.0, res(True), 1e-6)[1].startswith("not confirmed")
    assert classify(1.0, 5.0, 3.0, res(True), 1e-6)[1] == "no nontrivial critical point found"
    assert classify(1.0, 5.0, 3.0, res(False, -1.0), 1e-6)[1].startswith("nontrivial critical point found below B")
    assert classify(4.0, 5.0, 3.0, res(True), 1e-6)[1].startswith("unresolved")


# --- commands and exit codes -------------------------------------------------


def test_check_exit_codes(capsys):
    code, out, _ = run(capsys, "check", "--config", CONFIGS / "conforming_3d.yaml")
    assert code == 0 and "relaxed_mode: False" in out
    code, out, _ = run(capsys, "check", "--config", CONFIGS / "oracle_1d.yaml")
    assert code == 1
    assert "FAILED" in out and "first violated inequality: (phi2)^0 < q2-" in out


def test_validation_and_io_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "eig", "--config", tmp_path / "nope.yaml")
    assert code == 3 and "error" in err
    bad = write(tmp_path, {k: v for k, v in SMALL.items() if k != "m"})
    code, _, err = run(capsys, "eig", "--config", bad)
    assert code == 1 and "missing required field 'm'" in err
    with pytest.raises(SystemExit):
        main(["frobnicate", "--config", str(bad)])


def test_nonconvergence_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, {**SMALL, "solver": {"restarts": 1, "max_iterations": 2}})
    code, out, err = run(capsys, "eig", "--config", cfg)
    assert code == 2 and "did not converge" in err
    assert json.loads(out)["A"]["converged"] is False


def test_eig_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "eig", "--config", cfg, "--out", out_dir, "--emit-minimizer")
    assert code == 0
    data = json.loads((out_dir / "eig.json").read_text())
    assert data == json.loads(out)
    assert data["command"] == "eig" and data["B_le_A"] is True
    assert data["A"]["value"] >= data["B"]["value"] - 1e-6
    assert data["lambda_m"]["value"] > 0
    for name in ("minimizer_A.csv", "minimizer_B.csv"):
        assert (out_dir / name).read_text().startswith("i,value\n")


def test_family_command(tmp_path, capsys):
    raw = {**SMALL, "family": {"lambdas": ["A + 0.5", "B - 0.5", 1e6]}}
    code, out, _ = run(capsys, "family", "--config", write(tmp_path, raw), "--out", tmp_path / "o")
    data = json.loads(out)
    labels = [row["classification"] for row in data["rows"]]
    assert labels[0] == "eigenvalue" and labels[1] == "no nontrivial critical point found"
    assert code in (0, 2)
    assert (tmp_path / "o" / "family.csv").exists()


def test_indices_and_norms(tmp_path, capsys):
    cfg = write(tmp_path, {**SMALL, "phi1": {"family": "LogPower", "p": 2.5, "s": 1.0}})
    code, out, _ = run(capsys, "indices", "--config", cfg)
    data = json.loads(out)
    assert code == 0 and data["phi1"]["index_lower"] == 2.5 and data["phi1"]["index_upper"] == 3.5
    code, out, _ = run(capsys, "norms", "--config", cfg)
    data = json.loads(out)
    assert code == 0 and data["constant_one"]["q1"] == pytest.approx(1.0, rel=1e-8)


def test_sweep_command_and_determinism(tmp_path, capsys):
    raw = {**SMALL, "V": 0, "sweep": {"radii_ref": [0, 0.5, 1.0]}}
    cfg = write(tmp_path, raw)
    outs = []
    for k in range(2):
        d = tmp_path / f"s{k}"
        code, _, _ = run(capsys, "sweep", "--config", cfg, "--out", d, "--emit-minimizer")
        assert code == 0
        outs.append(d)
    names = sorted(p.name for p in outs[0].iterdir())
    assert "sweep.csv" in names and "sweep.json" in names
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    rows = (outs[0] / "sweep.csv").read_text().splitlines()
    assert rows[0] == "R,a_star,converged,iterations,residual" and len(rows) == 4


def test_seed_override_changes_random_potential(tmp_path, capsys):
    raw = {**SMALL, "V": {"random": {"low": -1, "high": 1}}}
    cfg = write(tmp_path, raw)
    a = json.loads(run(capsys, "norms", "--config", cfg, "--seed", "1")[1])
    b = json.loads(run(capsys, "norms", "--config", cfg, "--seed", "2")[1])
    assert a["V"]["norm_r"] != b["V"]["norm_r"]
    assert a["config"]["config_sha256"] == b["config"]["config_sha256"]
