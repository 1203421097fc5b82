"""Plausibility constraints for counterfactuals and the cohort violation audit.

Three checks apply to a (factual, counterfactual) pair:

* immutability (P1): an immutable feature present at any period must stay
  present at all later periods, and may never be cleared relative to the
  factual record;
* temporal coherence (P2): every changed non-intervention bit must be
  reachable in the dependency graph from an intervention that is active
  at an earlier-or-equal period in the counterfactual;
* conditional plausibility (P3): the factorized probability of the
  counterfactual's final-period bits given its earlier periods must
  exceed a threshold epsilon.

The audit scans a cohort for patients whose record would force a naive
single-bit removal to violate these constraints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catalog import FeatureCatalog, TaxonomyClass
from .cohort import Cohort, Period, TemporalFeatureVector
from .depgraph import DependencyGraph, Vertex, conditional_probability
from .errors import CohortError, GraphError

P3_FACTOR_FLOOR = 1e-6
DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class Violation:
    constraint: str  # "P1" | "P2" | "P3"
    code: str
    period: Period
    detail: str

    def to_json(self) -> dict:
        return {
            "constraint": self.constraint,
            "feature": self.code,
            "period": self.period.suffix,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class PlausibilityVerdict:
    p1_ok: bool
    p2_ok: bool
    p3_ok: bool
    p3_probability: float
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.p1_ok and self.p2_ok and self.p3_ok

    def to_json(self) -> dict:
        return {
            "p1_ok": self.p1_ok,
            "p2_ok": self.p2_ok,
            "p3_ok": self.p3_ok,
            "p3_probability": self.p3_probability,
            "violations": [v.to_json() for v in self.violations],
        }


def check_p1(
    catalog: FeatureCatalog,
    factual: TemporalFeatureVector,
    cf: TemporalFeatureVector,
) -> tuple[Violation, ...]:
    """Immutability violations in the counterfactual relative to the factual."""
    violations: list[Violation] = []
    for feat in catalog.by_class(TaxonomyClass.IMMUTABLE):
        j = feat.index
        fact_col = factual.bits[:, j]
        cf_col = cf.bits[:, j]
        for period in Period:
            if fact_col[int(period)] == 1 and cf_col[int(period)] == 0:
                violations.append(
                    Violation(
                        "P1",
                        feat.code,
                        period,
                        f"{feat.code} removed at {period.suffix}: immutable features "
                        "cannot be counterfactually cleared",
                    )
                )
        # Forward persistence: a bit the counterfactual introduces at t must
        # be present at every t' > t.  Bits the factual record already has
        # are not re-litigated: a patient's own record is never its own
        # violation, only the clearing rule above applies to them.
        for t in Period:
            if cf_col[int(t)] != 1 or fact_col[int(t)] == 1:
                continue
            for t_later in Period:
                if int(t_later) > int(t) and cf_col[int(t_later)] == 0:
                    violations.append(
                        Violation(
                            "P1",
                            feat.code,
                            t_later,
                            f"{feat.code} present at {t.suffix} but absent at "
                            f"{t_later.suffix}: immutable features must persist",
                        )
                    )
    return _dedupe(violations)


def _dedupe(violations: list[Violation]) -> tuple[Violation, ...]:
    seen: set[tuple[str, str, int]] = set()
    out: list[Violation] = []
    for v in violations:
        key = (v.constraint, v.code, int(v.period))
        if key not in seen:
            seen.add(key)
            out.append(v)
    return tuple(out)


def check_p2(
    catalog: FeatureCatalog,
    graph: DependencyGraph,
    factual: TemporalFeatureVector,
    cf: TemporalFeatureVector,
) -> tuple[Violation, ...]:
    """Temporal-coherence violations: changed bits unreachable from interventions."""
    intervention_idx = {f.index for f in catalog.by_class(TaxonomyClass.INTERVENTION)}
    active: list[Vertex] = []
    for period in Period:
        for j in intervention_idx:
            if cf.bits[int(period), j] == 1:
                active.append(Vertex(j, period))

    violations: list[Violation] = []
    for period in Period:
        diff = np.flatnonzero(factual.bits[int(period)] != cf.bits[int(period)])
        for j in diff:
            j = int(j)
            if j in intervention_idx:
                continue
            target = Vertex(j, period)
            ancestors = graph.ancestors_of(target)
            supported = any(
                src in ancestors and int(src.period) <= int(period) for src in active
            )
            if not supported:
                code = catalog.features[j].code
                violations.append(
                    Violation(
                        "P2",
                        code,
                        period,
                        f"{code} changed at {period.suffix} with no active intervention "
                        "connected to it in the dependency graph",
                    )
                )
    return tuple(violations)


def check_p3(
    graph: DependencyGraph,
    cf: TemporalFeatureVector,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[bool, float]:
    """Factorized final-period probability of the counterfactual under the tables."""
    catalog = graph.catalog
    probability = 1.0
    for j in range(catalog.d):
        vertex = Vertex(j, Period.LAST)
        theta = graph.tables.get(vertex)
        if theta is None:
            raise GraphError(
                f"no conditional table for final-period feature "
                f"{catalog.features[j].code}"
            )
        parent_bits = tuple(
            int(cf.bits[int(p.period), p.feature]) for p in theta.parents
        )
        p_one = conditional_probability(theta, parent_bits)
        factor = p_one if cf.bits[int(Period.LAST), j] == 1 else 1.0 - p_one
        probability *= max(factor, P3_FACTOR_FLOOR)
    return probability > epsilon, probability


def evaluate(
    catalog: FeatureCatalog,
    graph: DependencyGraph,
    factual: TemporalFeatureVector,
    cf: TemporalFeatureVector,
    epsilon: float = DEFAULT_EPSILON,
) -> PlausibilityVerdict:
    """Full three-constraint verdict for a counterfactual."""
    p1 = check_p1(catalog, factual, cf)
    p2 = check_p2(catalog, graph, factual, cf)
    p3_ok, p3_prob = check_p3(graph, cf, epsilon)
    violations = list(p1) + list(p2)
    if not p3_ok:
        violations.append(
            Violation(
                "P3",
                "*",
                Period.LAST,
                f"factorized final-period probability {p3_prob:.3e} "
                f"does not exceed epsilon {epsilon:.3e}",
            )
        )
    return PlausibilityVerdict(
        p1_ok=not p1,
        p2_ok=not p2,
        p3_ok=p3_ok,
        p3_probability=p3_prob,
        violations=tuple(violations),
    )


def calibrate_epsilon(
    graph: DependencyGraph, cohort: Cohort, percentile: float = 1.0
) -> float:
    """Set epsilon at a low percentile of factorized probabilities over the cohort."""
    if cohort.n == 0:
        raise CohortError("empty cohort: cannot calibrate epsilon")
    probs = np.array(
        [check_p3(graph, patient.features, epsilon=0.0)[1] for patient in cohort]
    )
    return float(np.percentile(probs, percentile))


@dataclass(frozen=True)
class RateCell:
    numerator: int
    denominator: int

    @property
    def rate(self) -> float | None:
        if self.denominator == 0:
            return None
        return self.numerator / self.denominator

    def to_json(self) -> dict:
        return {
            "numerator": self.numerator,
            "denominator": self.denominator,
            "rate": self.rate,
        }

    def render(self) -> str:
        if self.denominator == 0:
            return f"{self.numerator:>5}/{self.denominator:<5}   n/a"
        return f"{self.numerator:>5}/{self.denominator:<5} {100 * self.rate:5.1f}%"


@dataclass(frozen=True)
class ViolationReport:
    n_patients: int
    patient_p1: RateCell
    patient_p2: RateCell
    patient_any: RateCell
    feature_p1: dict[str, RateCell]
    feature_p2: dict[str, RateCell]

    def to_json(self) -> dict:
        return {
            "n_patients": self.n_patients,
            "patient_level": {
                "p1": self.patient_p1.to_json(),
                "p2": self.patient_p2.to_json(),
                "any": self.patient_any.to_json(),
            },
            "feature_level_p1": {c: cell.to_json() for c, cell in self.feature_p1.items()},
            "feature_level_p2": {c: cell.to_json() for c, cell in self.feature_p2.items()},
        }

    def render_text(self) -> str:
        lines = [
            f"Violation audit over {self.n_patients} patients",
            "",
            "Patient-level",
            f"  immutability (P1)        {self.patient_p1.render()}",
            f"  temporal coherence (P2)  {self.patient_p2.render()}",
            f"  any violation            {self.patient_any.render()}",
            "",
            "Feature-level immutability (P1)",
        ]
        for code, cell in self.feature_p1.items():
            lines.append(f"  {code:<14} {cell.render()}")
        lines.append("")
        lines.append("Feature-level temporal coherence (P2)")
        for code, cell in self.feature_p2.items():
            lines.append(f"  {code:<14} {cell.render()}")
        return "\n".join(lines)

    @classmethod
    def from_json(cls, obj: dict | str) -> "ViolationReport":
        if isinstance(obj, str):
            obj = json.loads(obj)
        def cell(d: dict) -> RateCell:
            return RateCell(int(d["numerator"]), int(d["denominator"]))
        pl = obj["patient_level"]
        return cls(
            n_patients=int(obj["n_patients"]),
            patient_p1=cell(pl["p1"]),
            patient_p2=cell(pl["p2"]),
            patient_any=cell(pl["any"]),
            feature_p1={c: cell(v) for c, v in obj["feature_level_p1"].items()},
            feature_p2={c: cell(v) for c, v in obj["feature_level_p2"].items()},
        )


def audit_naive(
    cohort: Cohort, catalog: FeatureCatalog, graph: DependencyGraph | None = None
) -> ViolationReport:
    """Cohort-level audit of what naive bit-removal counterfactuals would violate.

    A patient counts toward a feature's immutability (P1) cell when the
    feature is present in both History and the final period: a naive
    counterfactual that removes it from the final period would rewrite
    established history.  A controllable feature with at least one known
    intervention pathway counts toward temporal coherence (P2) when it is
    present in the final period but no pathway intervention is present in
    History: removing it has no intervention that could explain the change.
    The graph argument is accepted for interface symmetry with the other
    audit entry points; the rates are defined directly on factual bits.
    """
    if cohort.n == 0:
        raise CohortError("empty cohort: nothing to audit")

    h = cohort.X[:, int(Period.HISTORY), :].astype(bool)
    last = cohort.X[:, int(Period.LAST), :].astype(bool)

    feature_p1: dict[str, RateCell] = {}
    p1_any = np.zeros(cohort.n, dtype=bool)
    for feat in catalog.by_class(TaxonomyClass.IMMUTABLE):
        present_last = last[:, feat.index]
        violating = present_last & h[:, feat.index]
        feature_p1[feat.code] = RateCell(int(violating.sum()), int(present_last.sum()))
        p1_any |= violating

    feature_p2: dict[str, RateCell] = {}
    p2_any = np.zeros(cohort.n, dtype=bool)
    for feat in catalog.by_class(TaxonomyClass.CONTROLLABLE):
        pathways = catalog.pathways_for_target(feat.code)
        if not pathways:
            continue
        present_last = last[:, feat.index]
        has_intervention = np.zeros(cohort.n, dtype=bool)
        for pw in pathways:
            has_intervention |= h[:, catalog.index_of(pw.intervention)]
        violating = present_last & ~has_intervention
        feature_p2[feat.code] = RateCell(int(violating.sum()), int(present_last.sum()))
        p2_any |= violating

    any_violation = p1_any | p2_any
    return ViolationReport(
        n_patients=cohort.n,
        patient_p1=RateCell(int(p1_any.sum()), cohort.n),
        patient_p2=RateCell(int(p2_any.sum()), cohort.n),
        patient_any=RateCell(int(any_violation.sum()), cohort.n),
        feature_p1=feature_p1,
        feature_p2=feature_p2,
    )
