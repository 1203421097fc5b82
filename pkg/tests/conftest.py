"""Shared fixtures: the calibrated cohort and artifacts derived from it.

Session-scoped because generation, graph estimation, and training are
deterministic; every test sees the same snapshot.
"""

from __future__ import annotations

import numpy as np
import pytest

from seqcf import riskmodel, synth
from seqcf.catalog import default_catalog
from seqcf.depgraph import estimate_graph


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def cohort():
    return synth.generate(synth.SynthConfig())


@pytest.fixture(scope="session")
def graph(cohort):
    return estimate_graph(cohort)


@pytest.fixture(scope="session")
def model(cohort):
    return riskmodel.train(cohort)


def make_toy_cohort(catalog, X, y, prefix="t"):
    """Build a Cohort directly from a (n, 3, d) bit array and labels."""
    from seqcf.cohort import Cohort

    X = np.asarray(X, dtype=np.uint8)
    y = np.asarray(y, dtype=np.uint8)
    ids = tuple(f"{prefix}{i:03d}" for i in range(X.shape[0]))
    return Cohort(catalog=catalog, patient_ids=ids, X=X, y=y)
