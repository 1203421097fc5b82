"""Relative-risk cascade and confounding reports."""

import numpy as np
import pytest

from seqcf import cascade
from seqcf.cohort import Period
from seqcf.errors import CohortError

from conftest import make_toy_cohort


def test_hand_ten_patient_rr(catalog):
    # 5 exposed (4 outcomes), 5 unexposed (2 outcomes): RR = 0.8 / 0.4 = 2.
    i = catalog.index_of("N18")
    X = np.zeros((10, 3, catalog.d), dtype=np.uint8)
    X[0:5, Period.HISTORY, i] = 1
    y = [1, 1, 1, 1, 0, 1, 1, 0, 0, 0]
    toy = make_toy_cohort(catalog, X, y)
    step = cascade.relative_risk(toy, ("N18", Period.HISTORY), "outcome")
    assert step.p_exposed == pytest.approx(0.8)
    assert step.p_unexposed == pytest.approx(0.4)
    assert step.relative_risk == pytest.approx(2.0)
    assert step.n_exposed == 5 and step.n_unexposed == 5
    assert step.k_exposed == 4 and step.k_unexposed == 2


def test_independent_exposure_rr_one(catalog):
    i = catalog.index_of("E11")
    X = np.zeros((8, 3, catalog.d), dtype=np.uint8)
    X[0:4, Period.HISTORY, i] = 1
    y = [1, 0, 1, 0, 1, 0, 1, 0]
    toy = make_toy_cohort(catalog, X, y)
    step = cascade.relative_risk(toy, ("E11", Period.HISTORY), "outcome")
    assert step.relative_risk == pytest.approx(1.0)


def test_swapped_exposure_coding_gives_reciprocal(catalog):
    i = catalog.index_of("N18")
    X = np.zeros((10, 3, catalog.d), dtype=np.uint8)
    X[0:5, Period.HISTORY, i] = 1
    y = [1, 1, 1, 1, 0, 1, 1, 0, 0, 0]
    toy = make_toy_cohort(catalog, X, y)
    flipped = X.copy()
    flipped[:, Period.HISTORY, i] = 1 - flipped[:, Period.HISTORY, i]
    toy_flipped = make_toy_cohort(catalog, flipped, y, prefix="f")
    rr = cascade.relative_risk(toy, ("N18", Period.HISTORY), "outcome").relative_risk
    rr_flipped = cascade.relative_risk(
        toy_flipped, ("N18", Period.HISTORY), "outcome"
    ).relative_risk
    assert rr_flipped == pytest.approx(1.0 / rr)


def test_exclusion_filter_drops_patients(catalog):
    i = catalog.index_of("N18")
    j = catalog.index_of("N17")
    X = np.zeros((12, 3, catalog.d), dtype=np.uint8)
    X[0:6, Period.HISTORY, i] = 1
    X[[0, 6], Period.HISTORY, j] = 1  # one excluded patient per stratum
    y = [1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0]
    toy = make_toy_cohort(catalog, X, y)
    step = cascade.relative_risk(
        toy, ("N18", Period.HISTORY), "outcome", exclude=("N17", Period.HISTORY)
    )
    assert step.n_exposed == 5 and step.n_unexposed == 5


def test_empty_stratum_error(catalog):
    X = np.zeros((4, 3, catalog.d), dtype=np.uint8)
    toy = make_toy_cohort(catalog, X, [0, 1, 0, 1])
    with pytest.raises(CohortError, match="empty stratum"):
        cascade.relative_risk(toy, ("N18", Period.HISTORY), "outcome")


def test_counts_reproduce_fractions(cohort):
    step1, step2 = cascade.cascade_report(cohort)
    for step in (step1, step2):
        assert step.p_exposed == pytest.approx(step.k_exposed / step.n_exposed)
        assert step.p_unexposed == pytest.approx(step.k_unexposed / step.n_unexposed)
        assert step.relative_risk == pytest.approx(step.p_exposed / step.p_unexposed)


def test_cascade_report_near_paper_values(cohort):
    step1, step2 = cascade.cascade_report(cohort)
    assert step1.relative_risk == pytest.approx(2.27, abs=0.25)
    assert step2.relative_risk == pytest.approx(1.19, abs=0.15)
    assert step2.p_exposed == pytest.approx(0.164, abs=0.015)
    assert step2.p_unexposed == pytest.approx(0.138, abs=0.015)


def test_confounding_profile_independent_treatment(catalog):
    rng = np.random.default_rng(0)
    X = np.zeros((400, 3, catalog.d), dtype=np.uint8)
    X[:, Period.HISTORY, catalog.index_of("Insulin")] = rng.random(400) < 0.5
    X[:, Period.HISTORY, catalog.index_of("N18")] = rng.random(400) < 0.4
    toy = make_toy_cohort(catalog, X, rng.integers(0, 2, 400))
    rows = cascade.confounding_profile(
        toy, ("Insulin", Period.HISTORY), [("N18", Period.HISTORY)]
    )
    assert rows[0].ratio == pytest.approx(1.0, abs=0.25)


def test_confounding_profile_restrict(cohort):
    rows = cascade.confounding_profile(
        cohort,
        ("Insulin", Period.HISTORY),
        [("Glucose_H", Period.LAST)],
        restrict=("E11", Period.HISTORY),
    )
    assert rows[0].p_treated == pytest.approx(0.193, abs=0.03)
    assert rows[0].p_untreated == pytest.approx(0.139, abs=0.03)


def test_empty_treatment_group_error(catalog):
    X = np.zeros((4, 3, catalog.d), dtype=np.uint8)
    toy = make_toy_cohort(catalog, X, [0, 1, 0, 1])
    with pytest.raises(CohortError, match="empty treatment group"):
        cascade.confounding_profile(
            toy, ("Insulin", Period.HISTORY), [("N18", Period.HISTORY)]
        )


def test_full_report_structure_and_renderings(cohort):
    report = cascade.full_report(cohort)
    assert set(report) >= {"cascade", "confounding", "glucose_among_diabetic"}
    text = cascade.render_text(report)
    json_text = cascade.report_to_json_text(report)
    assert "2.2" in json_text or "relative_risk" in json_text
    # The rendered RR matches the JSON value to display precision.
    step1 = report["cascade"][0]
    assert f"{step1['relative_risk']:.2f}" in text


def test_report_permutation_invariant(cohort):
    order = np.random.default_rng(3).permutation(cohort.n)
    shuffled = make_toy_cohort(
        cohort.catalog, cohort.X[order], np.asarray(cohort.y)[order], prefix="perm"
    )
    assert cascade.full_report(cohort) == cascade.full_report(shuffled)
