"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 1,
DataError -> 2, GenerationError (and subclasses) -> 3.
"""


class ThoughtbeamError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(ThoughtbeamError):
    """Invalid or contradictory configuration (unknown fields, bad combos)."""


class DataError(ThoughtbeamError):
    """Malformed persisted artifact: dataset rows, model files, tree dumps."""


class GenerationError(ThoughtbeamError):
    """A generator failed to produce candidates (includes transport failures)."""


class ReplayError(GenerationError):
    """A scripted generator was asked for a node its script does not cover."""


class ProtocolError(GenerationError):
    """An HTTP generator response violated the wire schema."""
