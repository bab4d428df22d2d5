"""Exception types shared across the package."""


class MisinfoError(Exception):
    """Base class for package-specific failures."""


class DegenerateInputError(MisinfoError, ValueError):
    """Numerically unusable input, e.g. a zero-norm vector or empty data."""


class ShapeMismatchError(MisinfoError, ValueError):
    """Tensor or gradient shapes do not line up."""


class ConfigError(MisinfoError, ValueError):
    """Invalid configuration value."""


class NondeterministicLossError(MisinfoError, RuntimeError):
    """A loss function returned different values for identical inputs."""


class CorpusError(MisinfoError, ValueError):
    """Base class for corpus file / data-model problems."""


class MalformedRecordError(CorpusError):
    """A corpus record is structurally invalid (bad JSON, missing fields, ...)."""


class DimensionMismatchError(CorpusError):
    """Embeddings of different dimensionality in one corpus."""


class DanglingParentError(CorpusError):
    """A post references a parent id that is not part of its tree."""


class CyclicTreeError(CorpusError):
    """A conversation tree contains a cycle or posts unreachable from the root."""
