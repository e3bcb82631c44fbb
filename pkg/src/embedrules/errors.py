"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
ingestion problems -> 3, DegenerateSearch -> 4.
"""


class EmbedRulesError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(EmbedRulesError):
    """A run configuration is missing fields or contains invalid values."""


class DegeneratePartition(EmbedRulesError):
    """Fewer than two distinct values; no fuzzy partition can be built."""


class NotScored(EmbedRulesError):
    """Operation requires dominance scores that have not been computed yet."""


class EmptyRuleBase(EmbedRulesError):
    """Pruning (or decoding) removed every rule."""


class DegenerateSearch(EmbedRulesError):
    """An entire GA generation decoded to empty rulebases."""


class DegenerateData(EmbedRulesError):
    """Input data cannot support the requested operation (e.g. k-means with
    fewer distinct points than clusters)."""


class IngestionMismatch(EmbedRulesError):
    """Ids in one input file do not line up with ids in another."""

    def __init__(self, message: str, offending_ids=()):
        super().__init__(message)
        self.offending_ids = list(offending_ids)
