"""Shared result types for counterfactual generation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import FeatureCatalog, TaxonomyClass
from .cohort import Period, TemporalFeatureVector
from .plausibility import PlausibilityVerdict


@dataclass(frozen=True)
class Change:
    """One flipped bit between the factual and counterfactual vectors."""

    code: str
    period: Period
    before: int
    after: int

    @property
    def direction(self) -> str:
        return "added" if self.after == 1 else "removed"

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "period": self.period.suffix,
            "direction": self.direction,
        }


@dataclass(frozen=True)
class QualityMetrics:
    predictive_shift: float  # y_hat(factual) - y_hat(counterfactual)
    plausible: bool
    actionable: bool
    sparsity: int  # L0 distance between factual and counterfactual

    def to_json(self) -> dict:
        return {
            "predictive_shift": self.predictive_shift,
            "plausible": self.plausible,
            "actionable": self.actionable,
            "sparsity": self.sparsity,
        }


@dataclass(frozen=True)
class CounterfactualResult:
    patient_id: str
    method: str  # "sequential" | "naive"
    catalog: FeatureCatalog
    factual: TemporalFeatureVector
    counterfactual: TemporalFeatureVector
    score_factual: float
    score_counterfactual: float
    changes: tuple[Change, ...]
    metrics: QualityMetrics
    verdict: PlausibilityVerdict
    interventions: tuple[str, ...] = field(default_factory=tuple)
    sampling: dict | None = None  # stochastic mode: n_samples, mean/std of scores

    def to_json(self) -> dict:
        out = {
            "patient_id": self.patient_id,
            "method": self.method,
            "score_factual": self.score_factual,
            "score_counterfactual": self.score_counterfactual,
            "predictive_shift": self.metrics.predictive_shift,
            "interventions": list(self.interventions),
            "changes": [c.to_json() for c in self.changes],
            "metrics": self.metrics.to_json(),
            "verdict": self.verdict.to_json(),
            "factual": vector_json(self.factual, self.catalog),
            "counterfactual": vector_json(self.counterfactual, self.catalog),
        }
        if self.sampling is not None:
            out["sampling"] = self.sampling
        return out


def vector_json(tau: TemporalFeatureVector, catalog: FeatureCatalog) -> dict:
    """Period-keyed lists of the codes present in a vector."""
    out: dict[str, list[str]] = {}
    for period in Period:
        row = tau.bits[int(period)]
        out[period.suffix] = [catalog.features[int(j)].code for j in np.flatnonzero(row)]
    return out


def diff_changes(
    factual: TemporalFeatureVector,
    counterfactual: TemporalFeatureVector,
    catalog: FeatureCatalog,
) -> tuple[Change, ...]:
    """All flipped bits, ordered by (period, feature index)."""
    changes: list[Change] = []
    for period in Period:
        a = factual.bits[int(period)]
        b = counterfactual.bits[int(period)]
        for j in np.flatnonzero(a != b):
            changes.append(
                Change(
                    code=catalog.features[int(j)].code,
                    period=period,
                    before=int(a[j]),
                    after=int(b[j]),
                )
            )
    return tuple(changes)


def is_actionable(
    factual: TemporalFeatureVector,
    counterfactual: TemporalFeatureVector,
    catalog: FeatureCatalog,
) -> bool:
    """True when at least one intervention-class bit differs."""
    idx = [f.index for f in catalog.by_class(TaxonomyClass.INTERVENTION)]
    if not idx:
        return False
    return bool((factual.bits[:, idx] != counterfactual.bits[:, idx]).any())
