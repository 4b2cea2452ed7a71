"""Exception hierarchy shared by all modules."""


class SocLearnError(Exception):
    """Base class for package-specific failures."""


class ConfigError(SocLearnError, ValueError):
    """Invalid configuration value, file, or argument combination."""


class DataError(SocLearnError, RuntimeError):
    """Input data is malformed or unusable."""


class InsufficientDataError(DataError):
    """Stream or trace is shorter than the estimator warm-up requires."""


class NumericalError(SocLearnError, RuntimeError):
    """A computation produced non-finite or otherwise unusable numbers."""


class GraphGenerationError(SocLearnError, RuntimeError):
    """Random graph generation exhausted its retry budget."""


class AssumptionViolationError(SocLearnError, ValueError):
    """A model violates the bounded log-likelihood-ratio requirement."""
