"""Exception hierarchy shared across the package."""


class SeqcfError(Exception):
    """Base class for all engine errors."""


class CatalogError(SeqcfError):
    """Invalid catalog content (duplicate codes, bad taxonomy, bad pathway)."""


class CohortError(SeqcfError):
    """Invalid cohort content or an empty/degenerate stratum."""


class ConfigError(SeqcfError):
    """Invalid generator or search configuration."""


class GraphError(SeqcfError):
    """Invalid dependency-graph query or construction input."""


class ModelError(SeqcfError):
    """Risk-model training or scoring failure."""
