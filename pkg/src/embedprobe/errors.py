"""Exception and warning types shared across the toolkit."""


class EmbedProbeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(EmbedProbeError):
    """A configuration value is missing, malformed, or out of range."""


class TooShort(EmbedProbeError):
    """A signal or embedding has too few samples for the operation."""


class ConstantSignal(EmbedProbeError):
    """Signal variance is below the representable floor; the cell must be
    excluded rather than zero-filled."""


class ParseError(EmbedProbeError):
    """A CSV or JSON input could not be parsed."""


class SchemaError(EmbedProbeError):
    """An input names unknown features or omits required ones."""


class GapError(EmbedProbeError):
    """A time column is not strictly increasing."""


class InvalidSpec(EmbedProbeError):
    """An embedder specification is internally inconsistent or incompatible
    with the signal it is applied to."""


class FormatError(EmbedProbeError):
    """An embedding file is truncated, ragged, or otherwise unreadable."""


class MetadataMismatch(EmbedProbeError):
    """A sidecar's declared shape disagrees with the matrix on disk."""


class ZeroVariance(EmbedProbeError):
    """A correlation input has (numerically) zero variance."""


class ZeroNorm(EmbedProbeError):
    """A cosine-similarity input has (numerically) zero norm."""


class ZeroMagnitude(EmbedProbeError):
    """A trajectory is constant, so smoothness is undefined."""


class DegenerateInput(EmbedProbeError):
    """All rows of a matrix are identical; PCA is undefined."""


class SingularSystem(EmbedProbeError):
    """An unregularized least-squares system is singular."""


class SingleClass(EmbedProbeError):
    """A classification routine received labels from one class only."""


class TooFewSamples(EmbedProbeError):
    """Not enough samples to form the requested folds or splits."""


class ProvenanceMismatch(EmbedProbeError):
    """Metric reports being assembled come from different datasets."""


class UnknownPanel(EmbedProbeError):
    """Requested figure panel does not exist."""


class NonConvergence(UserWarning):
    """An iterative solver hit its iteration cap; reported, never fatal."""
