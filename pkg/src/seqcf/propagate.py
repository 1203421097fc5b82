"""Sequential counterfactual generation by forward propagation.

Interventions (medication bits) are the only directly manipulable
features.  After applying them, downstream Past- and Last-period bits
are re-evaluated from the dependency graph's conditional tables in
topological order, so a change ripples forward in time instead of being
written directly into the patient's past.  Immutable conditions present
in History are re-asserted at both later periods on every output, which
makes the immutability constraint hold by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import plausibility, rng
from .catalog import FeatureCatalog, TaxonomyClass
from .cohort import Patient, Period, TemporalFeatureVector
from .depgraph import DependencyGraph, Vertex, conditional_probability
from .errors import CatalogError, ConfigError
from .results import CounterfactualResult, QualityMetrics, diff_changes, is_actionable
from .riskmodel import RiskModel, score, score_matrix


@dataclass(frozen=True)
class Intervention:
    code: str
    period: Period
    action: str  # "add" | "remove"

    def validate(self, catalog: FeatureCatalog) -> None:
        if self.code not in catalog:
            raise CatalogError(f"unknown feature: {self.code!r}")
        feature = catalog.feature(self.code)
        if feature.taxonomy is not TaxonomyClass.INTERVENTION:
            raise CatalogError(
                f"{self.code} is {feature.taxonomy.value}, not an intervention: "
                "only intervention-class features can be applied directly"
            )
        if self.action not in ("add", "remove"):
            raise ConfigError(f"intervention action must be 'add' or 'remove', got {self.action!r}")

    def to_json(self) -> dict:
        return {"code": self.code, "period": self.period.suffix, "action": self.action}


@dataclass(frozen=True)
class PropagationConfig:
    mode: str = "deterministic"  # "deterministic" | "stochastic"
    n_samples: int = 200
    seed: int = 7
    risk_threshold: float = 0.5
    epsilon: float = plausibility.DEFAULT_EPSILON

    def validate(self) -> None:
        if self.mode not in ("deterministic", "stochastic"):
            raise ConfigError("mode must be 'deterministic' or 'stochastic'")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if not 0.0 < self.risk_threshold < 1.0:
            raise ConfigError("risk_threshold must be strictly between 0 and 1")


def _apply_interventions(
    bits: np.ndarray, interventions: tuple[Intervention, ...], catalog: FeatureCatalog
) -> np.ndarray:
    out = bits.copy()
    for iv in interventions:
        out[int(iv.period), catalog.index_of(iv.code)] = 1 if iv.action == "add" else 0
    return out


def _downstream_vertices(catalog: FeatureCatalog) -> list[Vertex]:
    """Past then Last vertices of controllable features, topological order.

    Only controllable features respond to interventions.  Immutable
    conditions are exogenous: they keep their factual values at every
    period, so the engine can never clear or introduce one, and
    intervention features change only where explicitly applied.
    """
    controllable_idx = {f.index for f in catalog.by_class(TaxonomyClass.CONTROLLABLE)}
    order: list[Vertex] = []
    for period in (Period.PAST, Period.LAST):
        for j in range(catalog.d):
            if j in controllable_idx:
                order.append(Vertex(j, period))
    return order


def _deterministic_bits(
    graph: DependencyGraph,
    factual: TemporalFeatureVector,
    post: np.ndarray,
) -> np.ndarray:
    """Recompute bits downstream of changed ancestors; keep the rest factual."""
    catalog = graph.catalog
    bits = post.copy()
    changed: set[Vertex] = {
        Vertex(int(j), Period(int(t)))
        for t, j in zip(*np.nonzero(post != factual.bits))
    }
    for vertex in _downstream_vertices(catalog):
        ancestors = graph.ancestors_of(vertex)
        if not (changed & ancestors):
            continue
        theta = graph.tables.get(vertex)
        if theta is None:
            continue
        parent_bits = tuple(int(bits[int(p.period), p.feature]) for p in theta.parents)
        new_bit = 1 if conditional_probability(theta, parent_bits) >= 0.5 else 0
        if new_bit != bits[int(vertex.period), vertex.feature]:
            bits[int(vertex.period), vertex.feature] = new_bit
        if new_bit != factual.bits[int(vertex.period), vertex.feature]:
            changed.add(vertex)
        else:
            changed.discard(vertex)
    return bits


def propagate_samples(
    graph: DependencyGraph,
    factual: TemporalFeatureVector,
    interventions: tuple[Intervention, ...],
    config: PropagationConfig,
) -> np.ndarray:
    """Monte Carlo forward samples, shape (n_samples, 3, d), immutability enforced."""
    catalog = graph.catalog
    post = _apply_interventions(factual.bits, tuple(interventions), catalog)
    n = config.n_samples
    bits = np.repeat(post[None, :, :], n, axis=0).astype(np.uint8)
    for vertex in _downstream_vertices(catalog):
        theta = graph.tables.get(vertex)
        if theta is None:
            continue
        if theta.parents:
            parent_cols = np.stack(
                [bits[:, int(p.period), p.feature] for p in theta.parents], axis=1
            )
            # Pack each sample's parent pattern into an integer key and map
            # it through the conditional table, marginal as fallback.
            weights = 1 << np.arange(len(theta.parents) - 1, -1, -1)
            keys = parent_cols @ weights
            lookup = np.full(1 << len(theta.parents), theta.marginal)
            for pattern, p in theta.table.items():
                lookup[int(np.dot(pattern, weights))] = p
            probs = lookup[keys]
        else:
            probs = np.full(n, theta.marginal)
        u = rng.uniforms(
            config.seed, n, rng.STREAM_PROPAGATE, vertex.feature, int(vertex.period)
        )
        bits[:, int(vertex.period), vertex.feature] = (u < probs).astype(np.uint8)
    return bits


def propagate(
    graph: DependencyGraph,
    model: RiskModel,
    patient: Patient,
    interventions: list[Intervention] | tuple[Intervention, ...],
    config: PropagationConfig | None = None,
) -> CounterfactualResult:
    """Apply interventions and propagate their downstream effects."""
    config = config or PropagationConfig()
    config.validate()
    catalog = graph.catalog
    interventions = tuple(interventions)
    for iv in interventions:
        iv.validate(catalog)

    factual = patient.features
    y_fact = score(model, factual)
    sampling = None

    if config.mode == "deterministic":
        post = _apply_interventions(factual.bits, interventions, catalog)
        cf_bits = _deterministic_bits(graph, factual, post)
        cf = TemporalFeatureVector(cf_bits.astype(np.uint8))
        y_cf = score(model, cf)
    else:
        samples = propagate_samples(graph, factual, interventions, config)
        sample_scores = score_matrix(model, samples)
        majority = (samples.mean(axis=0) >= 0.5).astype(np.uint8)
        cf = TemporalFeatureVector(majority)
        y_cf = float(sample_scores.mean())
        sampling = {
            "n_samples": config.n_samples,
            "mean_score": float(sample_scores.mean()),
            "std_score": float(sample_scores.std()),
            "majority_score": score(model, cf),
        }

    changes = diff_changes(factual, cf, catalog)
    verdict = plausibility.evaluate(catalog, graph, factual, cf, config.epsilon)
    metrics = QualityMetrics(
        predictive_shift=y_fact - y_cf,
        plausible=verdict.ok,
        actionable=is_actionable(factual, cf, catalog),
        sparsity=len(changes),
    )
    return CounterfactualResult(
        patient_id=patient.patient_id,
        method="sequential",
        catalog=catalog,
        factual=factual,
        counterfactual=cf,
        score_factual=y_fact,
        score_counterfactual=y_cf,
        changes=changes,
        metrics=metrics,
        verdict=verdict,
        interventions=tuple(f"{iv.code}@{iv.period.suffix}:{iv.action}" for iv in interventions),
        sampling=sampling,
    )


def compute_metrics(
    model: RiskModel,
    factual: TemporalFeatureVector,
    counterfactual: TemporalFeatureVector,
    graph: DependencyGraph,
    epsilon: float = plausibility.DEFAULT_EPSILON,
) -> QualityMetrics:
    """The four quality metrics for an arbitrary (factual, counterfactual) pair."""
    catalog = graph.catalog
    if factual.d != counterfactual.d or factual.d != catalog.d:
        raise ConfigError("dimension mismatch between vectors and catalog")
    verdict = plausibility.evaluate(catalog, graph, factual, counterfactual, epsilon)
    return QualityMetrics(
        predictive_shift=score(model, factual) - score(model, counterfactual),
        plausible=verdict.ok,
        actionable=is_actionable(factual, counterfactual, catalog),
        sparsity=len(diff_changes(factual, counterfactual, catalog)),
    )


def search_interventions(
    graph: DependencyGraph,
    model: RiskModel,
    patient: Patient,
    config: PropagationConfig | None = None,
    max_interventions: int = 2,
) -> list[CounterfactualResult]:
    """Ranked propagation results over small intervention sets.

    Candidate actions toggle each intervention feature at History or Past
    (add when absent, remove when present).  Results are ordered by
    (plausible, predictive shift, -sparsity) descending with a
    deterministic code-based tie-break.
    """
    config = config or PropagationConfig()
    catalog = graph.catalog
    candidates: list[Intervention] = []
    for feat in catalog.by_class(TaxonomyClass.INTERVENTION):
        for period in (Period.HISTORY, Period.PAST):
            present = patient.features.get(feat.index, period) == 1
            candidates.append(
                Intervention(feat.code, period, "remove" if present else "add")
            )

    results: list[CounterfactualResult] = []
    for k in range(1, max_interventions + 1):
        for combo in itertools.combinations(candidates, k):
            results.append(propagate(graph, model, patient, combo, config))
    results.sort(
        key=lambda r: (
            not r.metrics.plausible,
            -r.metrics.predictive_shift,
            r.metrics.sparsity,
            r.interventions,
        )
    )
    return results
