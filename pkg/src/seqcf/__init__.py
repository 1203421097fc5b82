"""Sequential counterfactual engine over three-period binary clinical features."""

from .catalog import (
    Feature,
    FeatureCatalog,
    InterventionPathway,
    TaxonomyClass,
    default_catalog,
    load_catalog,
)
from .cohort import (
    Cohort,
    Patient,
    Period,
    TemporalFeatureVector,
    load_cohort,
    persistence_stats,
    prevalence,
    save_cohort,
)
from .depgraph import (
    ConditionalTable,
    DependencyGraph,
    Edge,
    Vertex,
    estimate_graph,
    graph_from_json,
    graph_to_json,
)
from .errors import (
    CatalogError,
    CohortError,
    ConfigError,
    GraphError,
    ModelError,
    SeqcfError,
)
from .naive import NaiveCfConfig, NotFound, generate_naive
from .plausibility import (
    PlausibilityVerdict,
    ViolationReport,
    audit_naive,
    calibrate_epsilon,
    check_p1,
    check_p2,
    check_p3,
)
# The bare `propagate` function is deliberately not re-exported: it would
# shadow the `seqcf.propagate` submodule. Use `seqcf.propagate.propagate`.
from .propagate import (
    Intervention,
    PropagationConfig,
    compute_metrics,
    search_interventions,
)
from .results import Change, CounterfactualResult, QualityMetrics
from .riskmodel import RiskModel, auroc, finite_difference_gradient_check, score, train
from .synth import SynthConfig, generate, validate_calibration

__version__ = "0.1.0"

__all__ = [
    "CatalogError",
    "Change",
    "Cohort",
    "CohortError",
    "ConditionalTable",
    "ConfigError",
    "CounterfactualResult",
    "DependencyGraph",
    "Edge",
    "Feature",
    "FeatureCatalog",
    "GraphError",
    "Intervention",
    "InterventionPathway",
    "ModelError",
    "NaiveCfConfig",
    "NotFound",
    "Patient",
    "Period",
    "PlausibilityVerdict",
    "PropagationConfig",
    "QualityMetrics",
    "RiskModel",
    "SeqcfError",
    "SynthConfig",
    "TaxonomyClass",
    "TemporalFeatureVector",
    "Vertex",
    "ViolationReport",
    "audit_naive",
    "auroc",
    "calibrate_epsilon",
    "check_p1",
    "check_p2",
    "check_p3",
    "compute_metrics",
    "default_catalog",
    "estimate_graph",
    "finite_difference_gradient_check",
    "generate",
    "generate_naive",
    "graph_from_json",
    "graph_to_json",
    "load_catalog",
    "load_cohort",
    "persistence_stats",
    "prevalence",
    "save_cohort",
    "score",
    "search_interventions",
    "train",
    "validate_calibration",
]
