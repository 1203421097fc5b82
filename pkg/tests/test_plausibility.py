"""Plausibility constraints P1-P3 and the cohort violation audit."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcf import plausibility
from seqcf.cohort import Period, TemporalFeatureVector
from seqcf.plausibility import (
    ViolationReport,
    audit_naive,
    calibrate_epsilon,
    check_p1,
    check_p2,
    check_p3,
    evaluate,
)

from conftest import make_toy_cohort


def _vec(catalog, **period_codes):
    bits = np.zeros((3, catalog.d), dtype=np.uint8)
    for suffix, codes in period_codes.items():
        period = Period.from_suffix(suffix)
        for code in codes:
            bits[period, catalog.index_of(code)] = 1
    return TemporalFeatureVector(bits)


# ---------------------------------------------------------------- P1


def test_p1_clearing_violation(catalog):
    factual = _vec(catalog, history=["E11"], last=["E11"])
    cf = _vec(catalog, history=["E11"])
    violations = check_p1(catalog, factual, cf)
    assert any(v.code == "E11" and v.period == Period.LAST for v in violations)


def test_p1_identity_always_ok(catalog):
    factual = _vec(catalog, history=["E11", "N18"], past=["E11"], last=["N18"])
    assert check_p1(catalog, factual, factual) == ()


@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_p1_identity_property(catalog, data):
    bits = data.draw(
        st.lists(st.integers(0, 1), min_size=3 * catalog.d, max_size=3 * catalog.d)
    )
    tau = TemporalFeatureVector(np.array(bits, dtype=np.uint8).reshape(3, catalog.d))
    assert check_p1(catalog, tau, tau) == ()


def test_p1_forward_persistence_of_added_bits(catalog):
    factual = _vec(catalog)
    cf = _vec(catalog, history=["E11"])  # added at History, absent later
    violations = check_p1(catalog, factual, cf)
    periods = {v.period for v in violations if v.code == "E11"}
    assert Period.PAST in periods and Period.LAST in periods


def test_p1_ignores_controllable_features(catalog):
    factual = _vec(catalog, history=["Glucose_H"], last=["Glucose_H"])
    cf = _vec(catalog, history=["Glucose_H"])
    assert check_p1(catalog, factual, cf) == ()


# ---------------------------------------------------------------- P2


def test_p2_pathway_supported_change_ok(catalog, graph):
    factual = _vec(catalog, history=["E11"], past=["Glucose_H"], last=["Glucose_H"])
    cf = _vec(catalog, history=["E11", "Insulin"], past=["Glucose_H"])
    assert check_p2(catalog, graph, factual, cf) == ()


def test_p2_unsupported_change_flagged(catalog, graph):
    factual = _vec(catalog, history=["E11"], last=["Glucose_H"])
    cf = _vec(catalog, history=["E11"])  # glucose normalized, no insulin anywhere
    violations = check_p2(catalog, graph, factual, cf)
    assert any(v.code == "Glucose_H" for v in violations)


def test_p2_intervention_only_change_vacuously_ok(catalog, graph):
    factual = _vec(catalog, history=["E11"])
    cf = _vec(catalog, history=["E11", "Metoprolol"])
    assert check_p2(catalog, graph, factual, cf) == ()


def test_p2_requires_intervention_at_or_before_change(catalog, graph):
    # Insulin only at Last cannot support a Past-period glucose change.
    factual = _vec(catalog, past=["Glucose_H"])
    cf = _vec(catalog, last=["Insulin"])
    violations = check_p2(catalog, graph, factual, cf)
    assert any(v.code == "Glucose_H" and v.period == Period.PAST for v in violations)


# ---------------------------------------------------------------- P3


def test_p3_training_patients_well_above_epsilon(graph, cohort):
    for i in range(5):
        ok, probability = check_p3(graph, cohort.patient_at(i).features)
        assert ok
        assert probability > plausibility.DEFAULT_EPSILON


def test_p3_probability_in_unit_interval(graph, cohort):
    rng = np.random.default_rng(4)
    for _ in range(20):
        bits = (rng.random((3, cohort.catalog.d)) < 0.5).astype(np.uint8)
        _, probability = check_p3(graph, TemporalFeatureVector(bits))
        assert 0.0 <= probability <= 1.0


def test_p3_missing_table_names_feature(graph, catalog):
    import dataclasses

    from seqcf.depgraph import Vertex
    from seqcf.errors import GraphError

    j = catalog.index_of("N17")
    pruned_tables = {v: t for v, t in graph.tables.items() if v != Vertex(j, Period.LAST)}
    pruned = dataclasses.replace(graph, tables=pruned_tables)
    with pytest.raises(GraphError, match="N17"):
        check_p3(pruned, _vec(catalog))


def test_calibrated_epsilon_admits_most_training_patients(graph, cohort):
    epsilon = calibrate_epsilon(graph, cohort)
    assert epsilon > 0
    passing = sum(
        1 for p in cohort if check_p3(graph, p.features, epsilon)[0]
    )
    assert passing / cohort.n >= 0.98


# ---------------------------------------------------------------- verdicts


@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_verdict_booleans_agree_with_violations(catalog, graph, data):
    def draw_vec():
        bits = data.draw(
            st.lists(st.integers(0, 1), min_size=3 * catalog.d, max_size=3 * catalog.d)
        )
        return TemporalFeatureVector(np.array(bits, dtype=np.uint8).reshape(3, catalog.d))

    verdict = evaluate(catalog, graph, draw_vec(), draw_vec())
    for constraint, ok in (("P1", verdict.p1_ok), ("P2", verdict.p2_ok), ("P3", verdict.p3_ok)):
        assert ok == all(v.constraint != constraint for v in verdict.violations)
    assert verdict.ok == (verdict.p1_ok and verdict.p2_ok and verdict.p3_ok)


# ---------------------------------------------------------------- audit


def test_audit_hand_micro_cohort(catalog):
    # Four patients, E11 at Last for three of them, History for two of
    # those: feature P1 rate 2/3.  Glucose_H at Last for two patients, one
    # with insulin in History: feature P2 rate 1/2.
    X = np.zeros((4, 3, catalog.d), dtype=np.uint8)
    e11, glu, ins = (
        catalog.index_of("E11"),
        catalog.index_of("Glucose_H"),
        catalog.index_of("Insulin"),
    )
    X[[0, 1], Period.HISTORY, e11] = 1
    X[[0, 1, 2], Period.LAST, e11] = 1
    X[[0, 3], Period.LAST, glu] = 1
    X[0, Period.HISTORY, ins] = 1
    toy = make_toy_cohort(catalog, X, [0, 0, 1, 0])
    report = audit_naive(toy, catalog)
    assert report.feature_p1["E11"].numerator == 2
    assert report.feature_p1["E11"].denominator == 3
    assert report.feature_p1["E11"].rate == pytest.approx(2 / 3)
    assert report.feature_p2["Glucose_H"].numerator == 1
    assert report.feature_p2["Glucose_H"].denominator == 2
    # Patients 0 and 1 carry E11 in History and Last (removal would rewrite
    # history); patient 3 has glucose without any pathway intervention.
    assert report.patient_p1.numerator == 2
    assert report.patient_p2.numerator == 1
    assert report.patient_any.numerator == 3
    assert report.n_patients == 4


def test_audit_rate_invariants(cohort):
    report = audit_naive(cohort, cohort.catalog)
    cells = [report.patient_p1, report.patient_p2, report.patient_any]
    cells += list(report.feature_p1.values()) + list(report.feature_p2.values())
    for cell in cells:
        assert 0 <= cell.numerator <= cell.denominator
    assert report.patient_any.rate >= max(report.patient_p1.rate, report.patient_p2.rate)


def test_audit_permutation_invariant(cohort):
    order = np.random.default_rng(8).permutation(cohort.n)
    shuffled = make_toy_cohort(
        cohort.catalog, cohort.X[order], np.asarray(cohort.y)[order], prefix="perm"
    )
    a = audit_naive(cohort, cohort.catalog).to_json()
    b = audit_naive(shuffled, cohort.catalog).to_json()
    assert a == b


def test_audit_p2_covers_pathway_targets_only(cohort):
    report = audit_naive(cohort, cohort.catalog)
    assert set(report.feature_p2) == {"Glucose_H", "Creatinine_H", "N17"}
    assert "Troponin_H" not in report.feature_p2


def test_audit_empty_denominator_renders_na(catalog):
    X = np.zeros((3, 3, catalog.d), dtype=np.uint8)
    toy = make_toy_cohort(catalog, X, [0, 0, 1])
    report = audit_naive(toy, catalog)
    assert report.feature_p1["E11"].rate is None
    assert "n/a" in report.render_text()


def test_audit_report_json_round_trip(cohort):
    report = audit_naive(cohort, cohort.catalog)
    clone = ViolationReport.from_json(json.dumps(report.to_json()))
    assert clone.to_json() == report.to_json()


def test_audit_text_and_json_agree(cohort):
    report = audit_naive(cohort, cohort.catalog)
    text = report.render_text()
    blob = report.to_json()
    for code, cell in blob["feature_level_p1"].items():
        assert code in text
        assert f"{cell['numerator']}/{cell['denominator']}" in text
