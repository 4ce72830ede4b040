import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from qagap import cli
from qagap.krylov import EigensolverError
from qagap.reduction import ReductionError

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def _registry():
    resources = []
    for p in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(p.read_text())
        resources.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(resources)


REGISTRY = _registry()


def validate(doc, name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    Draft202012Validator(schema, registry=REGISTRY).validate(doc)


def load(path):
    return json.loads(Path(path).read_text())


CHAIN5 = ["--gen", "chain5", "--w4", "1.49", "--penalty", "1.52"]


def test_schemas_are_valid():
    for p in SCHEMAS.glob("*.schema.json"):
        Draft202012Validator.check_schema(json.loads(p.read_text()))


def test_generate_writes_instance(tmp_path):
    out = tmp_path / "c5.json"
    assert cli.main(["generate", "chain5", "--w4", "1.51", "--penalty", "4", "-o", str(out)]) == 0
    doc = load(out)
    validate(doc, "instance")
    assert doc["weights"][3] == 1.51  # fourth vertex, 0-based index 3


def test_generate_uses_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path / "env"))
    assert cli.main(["generate", "loop", "--n", "6"]) == 0
    validate(load(tmp_path / "env" / "loop.json"), "instance")


def test_sweep_outputs(tmp_path):
    out = tmp_path / "sw"
    assert cli.main(["sweep", *CHAIN5, "--grid-step", "0.005", "--alpha", "2", "--out-dir", str(out)]) == 0
    summary = load(out / "summary.json")
    validate(summary, "summary")
    assert "scaling" in summary
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == "s,E_0,E_1,E_2,E_3,E_4,gap"
    assert (out / "traces.csv").exists()


def test_detect_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["detect", *CHAIN5, "--out-dir", str(out)]) == 0
    assert (a / "detect.json").read_bytes() == (b / "detect.json").read_bytes()
    assert (a / "traces.csv").read_bytes() == (b / "traces.csv").read_bytes()
    doc = load(a / "detect.json")
    validate(doc, "detect")
    assert doc["verdict"] == "strong"
    assert doc["hyperbola"]["ok"]


def test_lens_command(tmp_path):
    out = tmp_path / "lens"
    assert cli.main(["lens", "--gen", "chain5", "--w4", "1.49", "--penalty", "4", "--out-dir", str(out)]) == 0
    doc = load(out / "lens.json")
    validate(doc, "lens")
    assert doc["prediction"] == "no-anticrossing"
    assert (out / "levels.csv").read_text().startswith("level,bits,energy,gs_neighbor,fs_neighbor\n")


def test_lens_refuses_non_stoquastic_driver(tmp_path):
    code = cli.main(["lens", *CHAIN5, "--driver", "XX", "--xx-lambda", "1", "--out-dir", str(tmp_path)])
    assert code == cli.EXIT_USAGE


def test_reduce_command(tmp_path):
    out = tmp_path / "red"
    assert cli.main(["reduce", "--gen", "loop", "--n", "4", "--out-dir", str(out)]) == 0
    rep = load(out / "reduce.json")
    validate(rep, "reduce")
    assert rep["n_terms"] == 7 and rep["mis_weight"] == 12
    validate(load(out / "conflict.json"), "instance")
    assert (out / "conflict.dot").read_text().count("--") == 6


def test_scalecheck_command(tmp_path):
    out = tmp_path / "sc"
    args = ["scalecheck", "--gen", "chain5", "--w4", "1.51", "--penalty", "10", "--alpha", "10", "--grid-step", "0.005"]
    assert cli.main([*args, "--out-dir", str(out)]) == 0
    doc = load(out / "scaling.json")
    validate(doc, "scaling")
    assert all(c["eigen_residual"] <= 1e-9 for c in doc["eigen_scaling"])


@pytest.mark.parametrize(
    "argv",
    [
        ["detect"],
        ["detect", "--gen", "chain5", "--instance", "x.json"],
        ["detect", *CHAIN5, "--grid-step", "0.3"],
        ["detect", *CHAIN5, "--gamma", "0.6"],
        ["detect", "--instance", "does-not-exist.json"],
        ["detect", *CHAIN5, "--driver", "XX", "--xx-edges", "0-9"],
        ["scalecheck", *CHAIN5],
        ["reproduce", "fig99"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv))
    assert exc.value.code == cli.EXIT_USAGE


def test_numerical_failure_exit_2(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise EigensolverError("no convergence", [1e-3], 0.5)

    monkeypatch.setattr(cli, "analyze", boom)
    assert cli.main(["detect", *CHAIN5, "--out-dir", str(tmp_path)]) == cli.EXIT_NUMERICAL
    err = json.loads(capsys.readouterr().err)
    validate(err, "error")
    assert err["details"]["s"] == 0.5
    assert load(tmp_path / "error.json") == err


def test_theorem_violation_exit_3(tmp_path, monkeypatch):
    def broken(m):
        raise ReductionError("max phi differs")

    monkeypatch.setattr(cli, "reduce_and_verify", broken)
    assert cli.main(["reduce", "--gen", "loop", "--out-dir", str(tmp_path)]) == cli.EXIT_THEOREM
    validate(load(tmp_path / "error.json"), "error")


def test_scalecheck_failure_exit_3(tmp_path, monkeypatch):
    real = cli.min_gap_scale_report

    def failing(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep.checks["sandwich_upper"] = False
        return rep

    monkeypatch.setattr(cli, "min_gap_scale_report", failing)
    args = ["scalecheck", "--gen", "chain5", "--w4", "1.51", "--penalty", "10", "--alpha", "3", "--grid-step", "0.01"]
    assert cli.main([*args, "--out-dir", str(tmp_path)]) == cli.EXIT_THEOREM
    assert load(tmp_path / "scaling.json")["passed"] is False


def test_reproduce_writes_comparison(tmp_path, capsys):
    assert cli.main(["reproduce", "fig8", "--out-dir", str(tmp_path)]) == 0
    doc = load(tmp_path / "fig8" / "comparison.json")
    validate(doc, "comparison")
    assert doc["passed"]
    assert "all comparisons ok" in capsys.readouterr().out
