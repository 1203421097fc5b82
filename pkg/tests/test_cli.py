"""Command-line interface: pipeline wiring, exit codes, atomic outputs."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from seqcf.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory, runner):
    """Full pipeline run: cohort -> graph -> model, shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli-artifacts")
    cohort = root / "cohort.csv"
    graph = root / "graph.json"
    model = root / "model.json"
    for args in (
        ["synth", "--out", str(cohort)],
        ["graph", "--cohort", str(cohort), "--out", str(graph)],
        ["train", "--cohort", str(cohort), "--out", str(model)],
    ):
        result = runner.invoke(main, args, catch_exceptions=False)
        assert result.exit_code == 0, result.output
    return root


def test_synth_default_run(runner, tmp_path):
    out = tmp_path / "cohort.csv"
    result = runner.invoke(main, ["synth", "--out", str(out)], catch_exceptions=False)
    assert result.exit_code == 0
    assert "calibration: PASS" in result.output
    lines = out.read_text().splitlines()
    assert len(lines) == 2724  # header + patients
    report = json.loads(Path(f"{out}.calibration.json").read_text())
    assert report["ok"] is True


def test_synth_byte_identical_reruns(runner, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    runner.invoke(main, ["synth", "--out", str(a), "--seed", "5"], catch_exceptions=False)
    runner.invoke(main, ["synth", "--out", str(b), "--seed", "5"], catch_exceptions=False)
    assert a.read_bytes() == b.read_bytes()


def test_synth_bad_probability_exits1_naming_parameter(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"history_prevalence": {"E11": 1.5}}))
    out = tmp_path / "cohort.csv"
    result = runner.invoke(main, ["synth", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 1
    assert "history_prevalence" in result.output
    assert not out.exists()  # no partial artifact


def test_graph_contains_cascade_edge(artifacts):
    blob = json.loads((artifacts / "graph.json").read_text())
    pairs = {
        (e["src"]["code"], e["src"]["period"], e["dst"]["code"], e["dst"]["period"])
        for e in blob["edges"]
    }
    assert ("N18", "history", "N17", "last") in pairs


def test_graph_huge_gamma_keeps_only_pathway_edges(runner, artifacts, tmp_path):
    out = tmp_path / "graph.json"
    result = runner.invoke(
        main,
        ["graph", "--cohort", str(artifacts / "cohort.csv"), "--gamma", "1e9", "--out", str(out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert "only pathway edges" in result.output
    blob = json.loads(out.read_text())
    assert {e["source"] for e in blob["edges"]} == {"pathway"}


def test_graph_tiny_cohort_warns(runner, artifacts, tmp_path):
    tiny = tmp_path / "tiny.csv"
    full = (artifacts / "cohort.csv").read_text().splitlines()
    tiny.write_text("\n".join(full[:6]) + "\n")
    out = tmp_path / "graph.json"
    result = runner.invoke(
        main, ["graph", "--cohort", str(tiny), "--out", str(out)], catch_exceptions=False
    )
    assert result.exit_code == 0
    assert "only pathway edges" in result.output


def test_audit_text_and_json_agree(runner, artifacts, tmp_path):
    out = tmp_path / "audit.json"
    result = runner.invoke(
        main,
        ["audit", "--cohort", str(artifacts / "cohort.csv"), "--out", str(out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    blob = json.loads(out.read_text())
    for code, cell in blob["feature_level_p1"].items():
        assert code in result.output
        assert f"{cell['numerator']}/{cell['denominator']}" in result.output


def test_audit_empty_cohort_exits1(runner, artifacts, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text((artifacts / "cohort.csv").read_text().splitlines()[0] + "\n")
    result = runner.invoke(main, ["audit", "--cohort", str(empty)])
    assert result.exit_code == 1
    assert "error" in result.output


def _cf_args(artifacts, patient, *extra):
    return [
        "cf",
        "--cohort", str(artifacts / "cohort.csv"),
        "--graph", str(artifacts / "graph.json"),
        "--model", str(artifacts / "model.json"),
        "--patient", patient,
        *extra,
    ]


def _high_risk_patient(artifacts):
    """A patient the naive search will mutilate: high score, chronic bits."""
    import numpy as np

    from seqcf import riskmodel
    from seqcf.catalog import default_catalog
    from seqcf.cohort import load_cohort

    catalog = default_catalog()
    cohort = load_cohort((artifacts / "cohort.csv").read_text(), catalog)
    model = riskmodel.RiskModel.from_json((artifacts / "model.json").read_text())
    scores = riskmodel.score_matrix(model, cohort.X)
    j = catalog.index_of("E11")
    chronic = (cohort.X[:, 0, j] == 1) & (cohort.X[:, 2, j] == 1)
    candidates = np.flatnonzero(chronic & (scores >= 0.35))
    return cohort.patient_ids[int(candidates[0])]


def test_cf_naive_flags_p1_violation(runner, artifacts):
    patient = _high_risk_patient(artifacts)
    result = runner.invoke(
        main, _cf_args(artifacts, patient, "--mode", "naive", "--theta", "0.3"), catch_exceptions=False
    )
    assert result.exit_code == 0
    blob = json.loads(result.output)
    assert blob["method"] == "naive"
    assert any(v["constraint"] == "P1" for v in blob["verdict"]["violations"])


def test_cf_sequential_no_interventions_identity(runner, artifacts):
    patient = _high_risk_patient(artifacts)
    result = runner.invoke(main, _cf_args(artifacts, patient), catch_exceptions=False)
    assert result.exit_code == 0
    blob = json.loads(result.output)
    assert blob["factual"] == blob["counterfactual"]
    assert blob["predictive_shift"] == 0.0


def test_cf_intervention_parsing_and_determinism(runner, artifacts, tmp_path):
    patient = _high_risk_patient(artifacts)
    args = _cf_args(
        artifacts, patient,
        "--intervention", "Insulin@history",
        "--propagation", "stochastic", "--samples", "64", "--seed", "13",
    )
    a = runner.invoke(main, args, catch_exceptions=False)
    b = runner.invoke(main, args, catch_exceptions=False)
    assert a.exit_code == 0
    assert a.output == b.output
    blob = json.loads(a.output)
    assert blob["interventions"] == ["Insulin@history:add"]
    assert blob["sampling"]["n_samples"] == 64


def test_cf_rejects_immutable_intervention(runner, artifacts):
    patient = _high_risk_patient(artifacts)
    result = runner.invoke(
        main, _cf_args(artifacts, patient, "--intervention", "E11@history:remove")
    )
    assert result.exit_code == 1
    assert "not an intervention" in result.output


def test_cf_malformed_intervention_spec(runner, artifacts):
    patient = _high_risk_patient(artifacts)
    result = runner.invoke(main, _cf_args(artifacts, patient, "--intervention", "Insulin"))
    assert result.exit_code == 1
    assert "code@period" in result.output


def test_cf_unknown_patient_exits1(runner, artifacts):
    result = runner.invoke(main, _cf_args(artifacts, "nobody"))
    assert result.exit_code == 1
    assert "unknown patient" in result.output


def test_cascade_command(runner, artifacts, tmp_path):
    out = tmp_path / "cascade.json"
    result = runner.invoke(
        main,
        ["cascade", "--cohort", str(artifacts / "cohort.csv"), "--out", str(out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    blob = json.loads(out.read_text())
    assert 2.0 <= blob["cascade"][0]["relative_risk"] <= 2.6


def test_train_reports_holdout_auroc(runner, artifacts):
    assert (artifacts / "model.json").exists()
    blob = json.loads((artifacts / "model.json").read_text())
    assert blob["d"] == 14
    assert len(blob["weights"]) == 42


def test_train_single_class_exits1(runner, artifacts, tmp_path):
    lines = (artifacts / "cohort.csv").read_text().splitlines()
    # Keep the header and force every outcome to 1.
    rows = [lines[0]] + [line[: line.rfind(",")] + ",1" for line in lines[1:50]]
    path = tmp_path / "single.csv"
    path.write_text("\n".join(rows) + "\n")
    out = tmp_path / "model.json"
    result = runner.invoke(main, ["train", "--cohort", str(path), "--out", str(out)])
    assert result.exit_code == 1
    assert not out.exists()


def test_corrupt_json_artifact_exits1(runner, artifacts, tmp_path):
    bad = tmp_path / "graph.json"
    bad.write_text("{broken")
    patient = _high_risk_patient(artifacts)
    result = runner.invoke(
        main,
        [
            "cf",
            "--cohort", str(artifacts / "cohort.csv"),
            "--graph", str(bad),
            "--model", str(artifacts / "model.json"),
            "--patient", patient,
        ],
    )
    assert result.exit_code == 1


def test_failed_write_leaves_no_partial_file(runner, artifacts, tmp_path):
    # Writing into a missing directory fails before any partial artifact
    # can land at the destination.
    target = tmp_path / "missing-dir" / "out.csv"
    result = runner.invoke(main, ["synth", "--out", str(target)])
    assert result.exit_code == 1
    assert not target.exists()
    assert not target.parent.exists()
