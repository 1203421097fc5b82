"""Cohort loading, saving, and descriptive statistics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcf.cohort import (
    Period,
    TemporalFeatureVector,
    load_cohort,
    persistence_stats,
    prevalence,
    save_cohort,
)
from seqcf.errors import CohortError

from conftest import make_toy_cohort


def test_save_load_round_trip(cohort):
    clone = load_cohort(save_cohort(cohort), cohort.catalog)
    assert clone.patient_ids == cohort.patient_ids
    assert np.array_equal(clone.X, cohort.X)
    assert np.array_equal(clone.y, cohort.y)


@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_round_trip_property(catalog, data):
    n = data.draw(st.integers(min_value=0, max_value=8))
    bits = data.draw(
        st.lists(
            st.lists(st.integers(0, 1), min_size=3 * catalog.d, max_size=3 * catalog.d),
            min_size=n,
            max_size=n,
        )
    )
    y = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    X = np.array(bits, dtype=np.uint8).reshape(n, 3, catalog.d)
    toy = make_toy_cohort(catalog, X, y)
    clone = load_cohort(save_cohort(toy), catalog)
    assert np.array_equal(clone.X, toy.X)
    assert np.array_equal(clone.y, toy.y)


def test_jsonl_loading(catalog):
    text = (
        '{"patient_id": "a", "history": ["E11"], "last": ["E11", "N17"], "outcome": 1}\n'
        '{"patient_id": "b", "past": ["Insulin"], "outcome": 0}\n'
    )
    loaded = load_cohort(text, catalog, fmt="jsonl")
    assert loaded.n == 2
    assert loaded.X[0, Period.HISTORY, catalog.index_of("E11")] == 1
    assert loaded.X[0, Period.LAST, catalog.index_of("N17")] == 1
    assert loaded.X[1, Period.PAST, catalog.index_of("Insulin")] == 1
    assert list(loaded.y) == [1, 0]


def test_prevalence_equals_column_mean(cohort):
    for code in cohort.catalog.codes():
        for period in Period:
            j = cohort.catalog.index_of(code)
            assert prevalence(cohort, code, period) == pytest.approx(
                cohort.X[:, period, j].mean()
            )


def test_persistence_hand_oracle(catalog):
    # 3 patients with the condition in History (2 still have it at Last),
    # 3 without it in History (1 has it at Last):
    # p_given_present = 2/3, p_given_absent = 1/3, ratio = 2.0.
    j = catalog.index_of("E11")
    X = np.zeros((6, 3, catalog.d), dtype=np.uint8)
    X[0:3, Period.HISTORY, j] = 1
    X[0:2, Period.LAST, j] = 1
    X[3, Period.LAST, j] = 1
    toy = make_toy_cohort(catalog, X, [0] * 6)
    stats = persistence_stats(toy, "E11")
    assert stats.p_given_present == pytest.approx(2 / 3)
    assert stats.p_given_absent == pytest.approx(1 / 3)
    assert stats.ratio == pytest.approx(2.0)


def test_persistence_empty_stratum_errors(catalog):
    X = np.zeros((4, 3, catalog.d), dtype=np.uint8)
    toy = make_toy_cohort(catalog, X, [0] * 4)
    with pytest.raises(CohortError, match="empty stratum: present"):
        persistence_stats(toy, "E11")
    X2 = X.copy()
    X2[:, Period.HISTORY, catalog.index_of("E11")] = 1
    toy2 = make_toy_cohort(catalog, X2, [0] * 4)
    with pytest.raises(CohortError, match="empty stratum: absent"):
        persistence_stats(toy2, "E11")


def test_statistics_permutation_invariant(catalog):
    rng = np.random.default_rng(5)
    X = (rng.random((40, 3, catalog.d)) < 0.4).astype(np.uint8)
    toy = make_toy_cohort(catalog, X, rng.integers(0, 2, 40))
    order = rng.permutation(40)
    shuffled = make_toy_cohort(catalog, X[order], np.asarray(toy.y)[order], prefix="s")
    for code in catalog.codes():
        assert prevalence(toy, code, Period.LAST) == pytest.approx(
            prevalence(shuffled, code, Period.LAST)
        )
    assert persistence_stats(toy, "E11") == persistence_stats(shuffled, "E11")


def test_load_errors(catalog):
    with pytest.raises(CohortError, match="empty cohort file"):
        load_cohort("", catalog)
    with pytest.raises(CohortError, match="patient_id and outcome"):
        load_cohort("a,b\n1,2\n", catalog)
    with pytest.raises(CohortError, match="unknown feature"):
        load_cohort("patient_id,Z99__last,outcome\na,1,0\n", catalog)
    with pytest.raises(CohortError, match="unknown period suffix"):
        load_cohort("patient_id,E11__sometime,outcome\na,1,0\n", catalog)
    with pytest.raises(CohortError, match="non-binary value"):
        load_cohort("patient_id,E11__last,outcome\na,2,0\n", catalog)
    with pytest.raises(CohortError, match="duplicate patient_id"):
        load_cohort("patient_id,E11__last,outcome\na,1,0\na,0,0\n", catalog)


def test_missing_columns_reported(catalog):
    loaded = load_cohort("patient_id,E11__last,outcome\na,1,0\n", catalog)
    assert "E11__history" in loaded.missing_columns
    assert f"I10__last" in loaded.missing_columns


def test_vector_shape_validation():
    with pytest.raises(CohortError, match="shape"):
        TemporalFeatureVector(np.zeros((2, 4), dtype=np.uint8))


def test_patient_lookup(cohort):
    pid = cohort.patient_ids[3]
    patient = cohort.patient(pid)
    assert patient.patient_id == pid
    assert np.array_equal(patient.features.bits, cohort.X[3])
    with pytest.raises(CohortError, match="unknown patient id"):
        cohort.patient("nobody")
