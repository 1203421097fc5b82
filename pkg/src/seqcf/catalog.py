"""Feature universe: taxonomy classes and intervention pathways.

The catalog defines which clinical concepts exist, how each one is
classified (immutable / controllable / intervention), and which
intervention-to-controllable pathway edges exist on clinical grounds.
It is immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import CatalogError


class TaxonomyClass(str, Enum):
    IMMUTABLE = "immutable"
    CONTROLLABLE = "controllable"
    INTERVENTION = "intervention"


@dataclass(frozen=True)
class Feature:
    """One clinical concept: dense index, unique code, display label."""

    index: int
    code: str
    label: str
    taxonomy: TaxonomyClass


@dataclass(frozen=True)
class InterventionPathway:
    """A clinically established intervention -> controllable edge.

    ``mechanism`` is documentation only and never enters computation.
    """

    intervention: str
    target: str
    mechanism: str = ""


@dataclass(frozen=True)
class FeatureCatalog:
    features: tuple[Feature, ...]
    pathways: tuple[InterventionPathway, ...]
    _by_code: dict[str, Feature] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_code", {f.code: f for f in self.features})

    @property
    def d(self) -> int:
        return len(self.features)

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def feature(self, code: str) -> Feature:
        try:
            return self._by_code[code]
        except KeyError:
            raise CatalogError(f"unknown feature code: {code!r}") from None

    def index_of(self, code: str) -> int:
        return self.feature(code).index

    def codes(self) -> tuple[str, ...]:
        return tuple(f.code for f in self.features)

    def by_class(self, taxonomy: TaxonomyClass) -> tuple[Feature, ...]:
        return tuple(f for f in self.features if f.taxonomy is taxonomy)

    def pathways_for_target(self, target_code: str) -> tuple[InterventionPathway, ...]:
        return tuple(p for p in self.pathways if p.target == target_code)

    def to_json(self) -> dict:
        return {
            "features": [
                {"code": f.code, "label": f.label, "class": f.taxonomy.value}
                for f in self.features
            ],
            "pathways": [
                {"intervention": p.intervention, "target": p.target, "mechanism": p.mechanism}
                for p in self.pathways
            ],
        }


def _build_catalog(feature_rows: list[dict], pathway_rows: list[dict]) -> FeatureCatalog:
    features: list[Feature] = []
    seen: set[str] = set()
    for i, row in enumerate(feature_rows):
        code = row.get("code", "")
        if not code:
            raise CatalogError(f"feature #{i} has an empty code")
        if code in seen:
            raise CatalogError(f"duplicate feature code: {code!r}")
        seen.add(code)
        cls = row.get("class")
        try:
            taxonomy = TaxonomyClass(cls)
        except ValueError:
            raise CatalogError(f"feature {code!r}: missing or invalid class {cls!r}") from None
        features.append(Feature(index=i, code=code, label=row.get("label", code), taxonomy=taxonomy))

    by_code = {f.code: f for f in features}
    pathways: list[InterventionPathway] = []
    pairs: set[tuple[str, str]] = set()
    for row in pathway_rows:
        ivn, target = row.get("intervention"), row.get("target")
        if ivn not in by_code:
            raise CatalogError(f"pathway references unknown intervention {ivn!r}")
        if target not in by_code:
            raise CatalogError(f"pathway references unknown target {target!r}")
        if by_code[ivn].taxonomy is not TaxonomyClass.INTERVENTION:
            raise CatalogError(f"pathway source not Intervention: {ivn!r}")
        if by_code[target].taxonomy is not TaxonomyClass.CONTROLLABLE:
            raise CatalogError(f"pathway target not Controllable: {target!r}")
        if (ivn, target) in pairs:
            raise CatalogError(f"duplicate pathway {ivn!r} -> {target!r}")
        pairs.add((ivn, target))
        pathways.append(InterventionPathway(ivn, target, row.get("mechanism", "")))

    return FeatureCatalog(features=tuple(features), pathways=tuple(pathways))


def load_catalog(source: str | dict) -> FeatureCatalog:
    """Parse and validate a catalog from a JSON string or parsed object."""
    if isinstance(source, str):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    else:
        obj = source
    if not isinstance(obj, dict):
        raise CatalogError("catalog must be a JSON object")
    return _build_catalog(obj.get("features", []), obj.get("pathways", []))


_DEFAULT_FEATURES = [
    # Immutable chronic comorbidities.
    ("E11", "Type 2 diabetes", "immutable"),
    ("I10", "Hypertension", "immutable"),
    ("N18", "Chronic kidney disease", "immutable"),
    ("I50", "Prior heart failure", "immutable"),
    ("E66", "Obesity", "immutable"),
    # Controllable labs and acute events.
    ("Glucose_H", "Elevated glucose", "controllable"),
    ("Creatinine_H", "Elevated creatinine", "controllable"),
    ("Troponin_H", "Elevated troponin", "controllable"),
    ("N17", "Acute kidney injury", "controllable"),
    # Actionable interventions.
    ("Lisinopril", "ACE inhibitor", "intervention"),
    ("Insulin", "Insulin", "intervention"),
    ("Metoprolol", "Beta blocker", "intervention"),
    ("Atorvastatin", "Statin", "intervention"),
    ("LoopDiuretic", "Loop diuretic", "intervention"),
]

_DEFAULT_PATHWAYS = [
    ("Insulin", "Glucose_H", "glycemic control"),
    ("Lisinopril", "N17", "renoprotection"),
    ("Lisinopril", "Creatinine_H", "creatinine stabilization"),
    ("LoopDiuretic", "Creatinine_H", "volume management"),
]


def default_catalog() -> FeatureCatalog:
    """The built-in 14-concept cardiometabolic catalog."""
    return _build_catalog(
        [{"code": c, "label": l, "class": k} for c, l, k in _DEFAULT_FEATURES],
        [{"intervention": i, "target": t, "mechanism": m} for i, t, m in _DEFAULT_PATHWAYS],
    )
