import json
from dataclasses import asdict

import pandas as pd
import pytest

from zsync.cli import RunManifest, _with_out, main
from zsync.errors import UsageError
from zsync.solvers import SolveOptions


def _json(path):
    return json.loads(path.read_text())


@pytest.fixture
def instance(tmp_path):
    out = tmp_path / "er"
    code = main(["generate", "erdos-renyi", "--n", "30", "--alpha", "1", "--eta", "0",
                 "--seed", "3", "--anchors", "3", "--out", str(out)])
    assert code == 0
    return out


def test_generate_writes_instance_and_manifest(instance):
    for name in ("graph.csv", "truth.csv", "anchors.csv", "manifest.json"):
        assert (instance / name).exists()
    manifest = _json(instance / "manifest.json")
    assert manifest["command"] == "generate"
    assert manifest["method"] == "erdos-renyi"
    assert manifest["params"]["n"] == 30 and manifest["params"]["m"] == 435
    assert manifest["params"]["h"] == 3
    assert manifest["versions"]["zsync"]
    assert len(pd.read_csv(instance / "anchors.csv")) == 3


def test_solve_recovers_noiseless_instance(instance, tmp_path):
    out = tmp_path / "eig"
    code = main(["solve", "eig", "--graph", str(instance / "graph.csv"),
                 "--truth", str(instance / "truth.csv"), "--out", str(out)])
    assert code == 0
    diag = _json(out / "diagnostics.json")
    assert diag["tau"] == 0.0
    assert diag["method"] == "eig" and diag["n"] == 30
    assert "wall_ms" not in diag
    sol = pd.read_csv(out / "solution.csv")
    assert list(sol.columns) == ["node", "estimate", "score"]
    assert len(sol) == 30
    params = _json(out / "manifest.json")["params"]
    assert params == asdict(SolveOptions())


def test_anchored_solve_with_timing(instance, tmp_path):
    out = tmp_path / "qcqp"
    code = main(["solve", "qcqp-i", "--graph", str(instance / "graph.csv"),
                 "--truth", str(instance / "truth.csv"), "--anchors", str(instance / "anchors.csv"),
                 "--timing", "--out", str(out)])
    assert code == 0
    diag = _json(out / "diagnostics.json")
    assert diag["tau"] == 0.0
    assert diag["wall_ms"] >= 0


def test_missing_side_input_is_a_usage_error(instance, tmp_path):
    code = main(["solve", "sdp-k", "--graph", str(instance / "graph.csv"), "--out", str(tmp_path / "x")])
    assert code == 2
    code = main(["solve", "sdp-xy", "--graph", str(instance / "graph.csv"), "--out", str(tmp_path / "x")])
    assert code == 2


def test_missing_file_is_an_io_error(tmp_path):
    code = main(["solve", "eig", "--graph", str(tmp_path / "none.csv"), "--out", str(tmp_path / "x")])
    assert code == 4


def test_replay_is_byte_identical(instance, tmp_path):
    first = tmp_path / "first"
    assert main(["solve", "mps", "--graph", str(instance / "graph.csv"),
                 "--anchors", str(instance / "anchors.csv"), "--seed", "4", "--out", str(first)]) == 0
    again = tmp_path / "again"
    assert main(["replay", str(first / "manifest.json"), "--out", str(again)]) == 0
    for name in ("solution.csv", "diagnostics.json"):
        assert (again / name).read_bytes() == (first / name).read_bytes()


def test_replay_of_generate(instance, tmp_path):
    again = tmp_path / "regen"
    assert main(["replay", str(instance / "manifest.json"), "--out", str(again)]) == 0
    assert (again / "graph.csv").read_bytes() == (instance / "graph.csv").read_bytes()
    assert (again / "anchors.csv").read_bytes() == (instance / "anchors.csv").read_bytes()


def test_partitioned_model_round_trip(tmp_path):
    inst = tmp_path / "bench"
    assert main(["generate", "benchmark-2", "--n", "20", "--k", "4", "--alpha", "0.5",
                 "--out", str(inst)]) == 0
    assert _json(inst / "manifest.json")["params"]["k"] == 4
    out = tmp_path / "part"
    assert main(["solve", "part-k", "--graph", str(inst / "graph.csv"), "--truth", str(inst / "truth.csv"),
                 "--partition", str(inst / "partition.csv"), "--out", str(out)]) == 0
    assert _json(out / "diagnostics.json")["tau"] == 0.0


def test_experiment_list(capsys):
    assert main(["experiment", "--list"]) == 0
    printed = capsys.readouterr().out
    assert "anchors-fig" in printed and "heatmap-fig" in printed


def test_experiment_run(tmp_path):
    out = tmp_path / "exp"
    code = main(["experiment", "mps-regular", "--n", "20", "--h", "1", "--seeds", "2",
                 "--set", "d_grid=[0, 4]", "--out", str(out)])
    assert code == 0
    results = pd.read_csv(out / "results.csv")
    assert len(results) == 2 * 2 * 2
    summary = pd.read_csv(out / "summary.csv")
    assert {"bad_degree", "method", "tau"} <= set(summary.columns)
    assert len(summary) == 4
    manifest = _json(out / "manifest.json")
    assert manifest["params"]["h_grid"] == [1]
    assert manifest["params"]["d_grid"] == [0, 4]


def test_experiment_from_spec_file(tmp_path):
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps({"preset": "noise-curve", "params": {"n": 30, "p_grid": [1.0], "seeds": 1}}))
    out = tmp_path / "exp"
    assert main(["experiment", "--spec", str(spec), "--out", str(out)]) == 0
    assert _json(out / "manifest.json")["inputs"] == {"spec": str(spec)}


def test_experiment_errors(tmp_path):
    assert main(["experiment", "nope", "--out", str(tmp_path)]) == 2
    assert main(["experiment", "noise-curve", "--h", "3", "--out", str(tmp_path)]) == 2
    assert main(["experiment", "noise-curve", "--set", "bogus=1", "--out", str(tmp_path)]) == 2


def test_analyze_threshold(tmp_path, capsys):
    out = tmp_path / "thr"
    assert main(["analyze", "threshold", "--n", "100", "--alpha", "1", "--p", "0.6", "--out", str(out)]) == 0
    payload = _json(out / "threshold.json")
    assert payload["p_star"] == pytest.approx(0.55)
    assert payload["detectable"] is True
    assert "NOISE THRESHOLD" in capsys.readouterr().out
    assert (out / "threshold_curve.csv").exists()


def test_analyze_graph_reports(instance, tmp_path):
    out = tmp_path / "spec"
    assert main(["analyze", "spectrum", "--graph", str(instance / "graph.csv"), "--out", str(out)]) == 0
    assert len(pd.read_csv(out / "spectrum.csv")) == 3
    assert main(["analyze", "correlation", "--graph", str(instance / "graph.csv"),
                 "--truth", str(instance / "truth.csv"), "--alpha", "1", "--p", "1", "--out", str(out)]) == 0
    assert _json(out / "correlation.json")["holds"] is True
    assert main(["analyze", "histogram", "--graph", str(instance / "graph.csv"), "--out", str(out)]) == 2


def test_multiplex_pipeline(tmp_path):
    data = tmp_path / "voting"
    assert main(["generate", "synthetic-voting", "--C", "2", "--S", "6", "--bills", "40",
                 "--seed", "1", "--out", str(data)]) == 0
    assert (data / "run.json").exists()
    out = tmp_path / "mux"
    assert main(["multiplex", "--manifest", str(data / "manifest.json"), "--method", "part-k",
                 "--out", str(out)]) == 0
    for name in ("graph.csv", "partition.csv", "solution.csv", "layer_spectra.csv", "multiplicity.csv",
                 "multiplicity_histogram.csv", "misclassification.csv", "entities.csv",
                 "diagnostics.json", "manifest.json"):
        assert (out / name).exists(), name
    diag = _json(out / "diagnostics.json")
    assert diag["n"] == 12
    assert 0.0 <= diag["tau"] <= 0.5


def test_manifest_helpers(tmp_path):
    path = tmp_path / "other.json"
    path.write_text("{}")
    with pytest.raises(UsageError):
        RunManifest.read(path)
    assert _with_out(["solve", "eig", "--out", "a"], "b") == ["solve", "eig", "--out", "b"]
    assert _with_out(["analyze", "threshold"], "b") == ["analyze", "threshold", "--out", "b"]
