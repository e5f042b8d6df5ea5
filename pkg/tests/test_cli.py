import json
import logging
import math

import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from src import config
from src.analyzer import suite
from src.analyzer.suite import CheckResult
from src.main import cli

SMALL_PARAMS = {"d0": 2, "k": 1, "lambda": [-1, 1], "mu": [1, 1], "eta": 0.1, "rho": 1,
                "n": 2, "ell": 8, "m": 2, "C": 1}
CAT_RATE = 2.0 * math.log((1.0 + math.sqrt(5.0)) / 2.0)


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
    root.setLevel(level)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        if name.endswith((".yaml", ".yml")):
            path.write_text(yaml.safe_dump(doc), encoding="utf-8")
        else:
            path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    return write


def _run(runner, args, out):
    result = runner.invoke(cli, args + ["--out", str(out)])
    return result


def _read(out):
    return json.loads(out.read_text(encoding="utf-8"))


def test_delta_spectrum(runner, tmp_path):
    out = tmp_path / "delta.json"
    result = _run(runner, ["delta", "--spectrum", "[-1,2]"], out)
    assert result.exit_code == 0, result.output
    assert _read(out) == {"deltaPlus": 2.0, "deltaMinus": 1.0, "delta": 1.0}


def test_delta_requires_input(runner, tmp_path):
    result = _run(runner, ["delta"], tmp_path / "x.json")
    assert result.exit_code == 2


def test_delta_bad_spectrum_is_schema_error(runner, tmp_path):
    result = _run(runner, ["delta", "--spectrum", "[-1,"], tmp_path / "x.json")
    assert result.exit_code == 2
    assert "错误" in result.output


def test_lyapunov_and_delta_of_cat(runner, tmp_path, files):
    cocycle = files("cat.json", {"dim": 2, "period": 1, "factors": [[2, 1, 1, 1]]})
    out = tmp_path / "lyap.json"
    assert _run(runner, ["lyapunov", "--cocycle", cocycle], out).exit_code == 0
    assert _read(out) == pytest.approx([-CAT_RATE, CAT_RATE], abs=1e-9)
    out = tmp_path / "delta.json"
    assert _run(runner, ["delta", "--cocycle", cocycle], out).exit_code == 0
    doc = _read(out)
    assert doc["delta"] == pytest.approx(CAT_RATE)
    assert doc["restrictedDeltas"] == {"1-1": 0.0, "2-2": 0.0}
    assert doc["deltaStar"] == 0.0
    assert doc["ruelleBounds"]["forward"] == pytest.approx(CAT_RATE)


def test_lyapunov_from_system(runner, tmp_path, files):
    system = files("cat_system.json", {"kind": "toral-automorphism", "params": {"matrix": [[2, 1], [1, 1]]}})
    out = tmp_path / "lyap.json"
    result = _run(runner, ["lyapunov", "--system", system, "--period", "1"], out)
    assert result.exit_code == 0, result.output
    assert _read(out) == pytest.approx([-CAT_RATE, CAT_RATE], abs=1e-9)


def test_domination_scan(runner, tmp_path, files):
    cocycle = files("cat.json", {"dim": 2, "period": 1, "factors": [[2, 1, 1, 1]]})
    out = tmp_path / "scan.json"
    assert _run(runner, ["domination-scan", "--cocycle", cocycle, "--weak-period", "5"], out).exit_code == 0
    doc = _read(out)
    assert doc["finest"] == [{"index": 1, "smallestN": 1}]
    assert doc["blocks"] == [[1, 1], [2, 2]]
    assert doc["tnWeak"] is False


def test_sigma_k(runner, tmp_path, files):
    cocycle = files("cat.json", {"dim": 2, "period": 1, "factors": [[2, 1, 1, 1]]})
    out = tmp_path / "sigma.json"
    assert _run(runner, ["sigma-k", "--cocycle", cocycle, "--k", "1", "--nmax", "10"], out).exit_code == 0
    doc = _read(out)
    assert doc["k"] == 1
    assert doc["slope"] == pytest.approx(CAT_RATE, rel=1e-9)
    assert len(doc["a_n"]) == 10


def test_build_horseshoe_with_verification(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    out = tmp_path / "build.json"
    model_path = tmp_path / "model.json"
    result = _run(runner, ["build-horseshoe", "--params", params, "--verify", "--emit-model", str(model_path)], out)
    assert result.exit_code == 0, result.output
    doc = _read(out)
    assert doc["scales"]["L"] == 1017
    assert doc["conservative"] is True
    assert doc["markov"] == "all-ones (capped 64)"
    assert doc["sftEntropyPerReturn"] == pytest.approx(math.log(64.0) / 14.0)
    assert doc["containment"]["ok"] is True
    assert doc["gap"] == pytest.approx(1.0 - math.log(1017.0) / 14.0)
    model = _read(model_path)
    assert [piece["name"] for piece in model["pieces"]][0] == "linear-ell"


def test_verify_horseshoe_uncapped(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    out = tmp_path / "verify.json"
    assert _run(runner, ["verify-horseshoe", "--params", params, "--l-factor", "0.01"], out).exit_code == 0
    doc = _read(out)
    assert doc["markov"] == "all-ones"
    assert doc["markovDetails"]["L"] == 20
    assert doc["markovDetails"]["verification"] == "exhaustive"


def test_verify_horseshoe_defaults_to_all_slices(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    out = tmp_path / "verify.json"
    assert _run(runner, ["verify-horseshoe", "--params", params], out).exit_code == 0
    doc = _read(out)
    assert doc["markov"] == "all-ones"
    assert doc["markovDetails"]["L"] == 1017
    assert doc["markovDetails"]["windowMargin"] > 0.0
    assert doc["sftEntropyPerReturn"] == pytest.approx(math.log(1017.0) / 14.0)


def test_verify_horseshoe_outside_identity_window(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    result = _run(runner, ["verify-horseshoe", "--params", params, "--l-factor", "2"], tmp_path / "verify.json")
    assert result.exit_code == 4


def test_verify_horseshoe_geometric_failure(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    out = tmp_path / "verify.json"
    result = _run(runner, ["verify-horseshoe", "--params", params, "--l-factor", "50"], out)
    assert result.exit_code == 4
    assert not out.exists()


def test_infeasible_construction_exit_code(runner, tmp_path, files):
    params = files("short.json", {**SMALL_PARAMS, "n": 1, "ell": 1})
    result = _run(runner, ["build-horseshoe", "--params", params], tmp_path / "x.json")
    assert result.exit_code == 4


def test_missing_params_file(runner, tmp_path):
    result = _run(runner, ["build-horseshoe", "--params", str(tmp_path / "none.json")], tmp_path / "x.json")
    assert result.exit_code == 2


def test_config_override_is_scoped(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    overrides = files("tol.yaml", {"L_FACTOR": 0.01})
    out = tmp_path / "build.json"
    result = _run(runner, ["build-horseshoe", "--params", params, "--config", overrides], out)
    assert result.exit_code == 0, result.output
    assert _read(out)["scales"]["L"] == 20
    assert config.L_FACTOR == 0.5


def test_unknown_config_key(runner, tmp_path, files):
    params = files("small.json", SMALL_PARAMS)
    overrides = files("tol.json", {"HSF_THREADS": 2})
    result = _run(runner, ["build-horseshoe", "--params", params, "--config", overrides], tmp_path / "x.json")
    assert result.exit_code == 2


def test_entropy_estimate_csv(runner, tmp_path, files):
    system = files("shift.json", {"kind": "shift", "params": {"matrix": [[1, 1], [1, 1]]}})
    out = tmp_path / "counts.csv"
    args = ["entropy-estimate", "--system", system, "--eps", "0.25", "--nmax", "6", "--seed", "1", "--format", "csv"]
    assert _run(runner, args, out).exit_code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["n", "delta", "eps", "count"]
    assert frame["count"].tolist() == [2 ** (n + 2) for n in range(1, 7)]


def test_entropy_estimate_requires_seed(runner, tmp_path, files):
    system = files("shift.json", {"kind": "shift", "params": {"matrix": [[1, 1], [1, 1]]}})
    assert _run(runner, ["entropy-estimate", "--system", system], tmp_path / "x.json").exit_code == 2


def test_tail_entropy(runner, tmp_path, files):
    system = files("shift.json", {"kind": "shift", "params": {"matrix": [[1, 1], [1, 1]]}})
    out = tmp_path / "tail.json"
    args = ["tail-entropy", "--system", system, "--eps", "0.25", "--delta", "0.125", "--nmax", "8", "--seed", "0"]
    assert _run(runner, args, out).exit_code == 0
    assert _read(out)["hStar"] == pytest.approx(0.0, abs=1e-9)


def test_katok_entropy(runner, tmp_path, files):
    system = files("shift.json", {"kind": "shift", "params": {"matrix": [[1, 1], [1, 1]]}})
    out = tmp_path / "katok.json"
    args = ["katok-entropy", "--system", system, "--nmax", "8", "--samples", "50000", "--seed", "3"]
    assert _run(runner, args, out).exit_code == 0
    assert _read(out)["estimate"] == pytest.approx(math.log(2.0), abs=0.1)


def test_katok_probs_only_for_shifts(runner, tmp_path, files):
    system = files("cat_system.json", {"kind": "toral-automorphism", "params": {"matrix": [[2, 1], [1, 1]]}})
    args = ["katok-entropy", "--system", system, "--probs", "0.5,0.5", "--seed", "0"]
    assert _run(runner, args, tmp_path / "x.json").exit_code == 2


def test_box_dim_default_cloud(runner, tmp_path):
    out = tmp_path / "box.json"
    assert _run(runner, ["box-dim"], out).exit_code == 0
    doc = _read(out)
    assert doc["formula"] == pytest.approx(1.26186, abs=1e-5)
    assert doc["dimension"] == pytest.approx(doc["formula"], abs=1e-9)


def test_box_dim_from_csv_cloud(runner, tmp_path):
    cloud = tmp_path / "segment.csv"
    cloud.write_text("\n".join(str(i / 1000.0) for i in range(1000)) + "\n", encoding="utf-8")
    out = tmp_path / "box.json"
    result = _run(runner, ["box-dim", "--cloud", str(cloud), "--scales", "0.25,0.125,0.0625,0.03125,0.015625"], out)
    assert result.exit_code == 0, result.output
    assert _read(out)["dimension"] == pytest.approx(1.0, abs=1e-9)


def test_report_exit_code(runner, tmp_path, monkeypatch):
    monkeypatch.setattr(suite, "CHECKS", {
        "passes": lambda seed: CheckResult.near(1.0, 1.0, 0.0),
        "fails": lambda seed: CheckResult.near(2.0, 1.0, 0.5),
    })
    out = tmp_path / "report.json"
    result = _run(runner, ["report", "--seed", "0"], out)
    assert result.exit_code == 3
    doc = _read(out)
    assert doc["passes"]["ok"] is True
    assert doc["fails"]["ok"] is False


def test_report_all_pass(runner, tmp_path, monkeypatch):
    monkeypatch.setattr(suite, "CHECKS", {"passes": lambda seed: CheckResult.near(1.0, 1.0, 0.0)})
    result = _run(runner, ["report", "--seed", "0"], tmp_path / "report.json")
    assert result.exit_code == 0
