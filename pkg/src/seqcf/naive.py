"""Baseline counterfactual search over unconstrained single-bit flips.

This search treats the temporal vector as a flat bag of 3d binary
features and looks for the smallest flip set that pushes the predicted
risk below a threshold.  It deliberately ignores the feature taxonomy:
its outputs are what the plausibility checks are designed to catch
(e.g. "remove the diabetes diagnosis from the final period").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import plausibility
from .cohort import Patient, Period, TemporalFeatureVector
from .depgraph import DependencyGraph
from .errors import ConfigError
from .results import CounterfactualResult, QualityMetrics, diff_changes, is_actionable
from .riskmodel import RiskModel, score

SEARCH_MODES = ("auto", "greedy", "exhaustive")
EXHAUSTIVE_BIT_LIMIT = 20  # auto mode switches to exhaustive at 3d <= 20


@dataclass(frozen=True)
class NaiveCfConfig:
    risk_threshold: float = 0.5
    distance: str = "l0"  # "l0" | "l1" (identical on binary vectors)
    max_changes: int = 5
    search: str = "auto"

    def validate(self) -> None:
        if not 0.0 < self.risk_threshold < 1.0:
            raise ConfigError("risk_threshold must be strictly between 0 and 1")
        if self.max_changes < 1:
            raise ConfigError("max_changes must be at least 1")
        if self.search not in SEARCH_MODES:
            raise ConfigError(f"search must be one of {SEARCH_MODES}")
        if self.distance not in ("l0", "l1"):
            raise ConfigError("distance must be 'l0' or 'l1'")


@dataclass(frozen=True)
class NotFound:
    """No flip set within the change budget crosses the risk threshold."""

    patient_id: str
    message: str


def _flip_scores(model: RiskModel, flat: np.ndarray) -> np.ndarray:
    """Score of the vector with each single bit flipped, vectorized."""
    z0 = float(flat @ model.weights + model.intercept)
    delta = (1.0 - 2.0 * flat) * model.weights
    z = z0 + delta
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _greedy(model: RiskModel, flat: np.ndarray, config: NaiveCfConfig) -> np.ndarray | None:
    current = flat.copy()
    current_score = score_flat(model, current)
    for _ in range(config.max_changes):
        candidates = _flip_scores(model, current)
        best = int(np.argmin(candidates))  # argmin takes the first tie: (period, feature) order
        if candidates[best] >= current_score:
            return None  # no single flip strictly decreases the score
        current[best] = 1.0 - current[best]
        current_score = float(candidates[best])
        if current_score < config.risk_threshold:
            return current
    return None


def _exhaustive(model: RiskModel, flat: np.ndarray, config: NaiveCfConfig) -> np.ndarray | None:
    n_bits = flat.shape[0]
    for k in range(1, config.max_changes + 1):
        for combo in itertools.combinations(range(n_bits), k):
            candidate = flat.copy()
            candidate[list(combo)] = 1.0 - candidate[list(combo)]
            if score_flat(model, candidate) < config.risk_threshold:
                return candidate
    return None


def score_flat(model: RiskModel, flat: np.ndarray) -> float:
    return float(
        0.5 * (1.0 + np.tanh(0.5 * (flat @ model.weights + model.intercept)))
    )


def generate_naive(
    model: RiskModel,
    patient: Patient,
    config: NaiveCfConfig,
    graph: DependencyGraph,
    epsilon: float = plausibility.DEFAULT_EPSILON,
) -> CounterfactualResult | NotFound:
    """Smallest unconstrained flip set pushing the score below the threshold.

    Greedy mode flips one bit at a time, always the flip with the largest
    score reduction; exhaustive mode scans flip sets in increasing size and
    lexicographic (period, feature) order and is minimal in L0 distance.
    Patients already below the threshold get the identity counterfactual.
    """
    config.validate()
    catalog = graph.catalog
    factual = patient.features
    y_fact = score(model, factual)

    if y_fact < config.risk_threshold:
        return _build_result(patient, factual, factual, y_fact, y_fact, graph, epsilon)

    flat = factual.flat().astype(np.float64)
    mode = config.search
    if mode == "auto":
        mode = "exhaustive" if flat.shape[0] <= EXHAUSTIVE_BIT_LIMIT else "greedy"
    found = (_greedy if mode == "greedy" else _exhaustive)(model, flat, config)
    if found is None:
        return NotFound(
            patient.patient_id,
            f"no flip set of size <= {config.max_changes} brings the score below "
            f"{config.risk_threshold}",
        )
    cf = TemporalFeatureVector(found.reshape(3, catalog.d).astype(np.uint8))
    return _build_result(patient, factual, cf, y_fact, score(model, cf), graph, epsilon)


def _build_result(
    patient: Patient,
    factual: TemporalFeatureVector,
    cf: TemporalFeatureVector,
    y_fact: float,
    y_cf: float,
    graph: DependencyGraph,
    epsilon: float,
) -> CounterfactualResult:
    catalog = graph.catalog
    changes = diff_changes(factual, cf, catalog)
    verdict = plausibility.evaluate(catalog, graph, factual, cf, epsilon)
    metrics = QualityMetrics(
        predictive_shift=y_fact - y_cf,
        plausible=verdict.ok,
        actionable=is_actionable(factual, cf, catalog),
        sparsity=len(changes),
    )
    return CounterfactualResult(
        patient_id=patient.patient_id,
        method="naive",
        catalog=catalog,
        factual=factual,
        counterfactual=cf,
        score_factual=y_fact,
        score_counterfactual=y_cf,
        changes=changes,
        metrics=metrics,
        verdict=verdict,
    )
