"""Exception hierarchy shared by the library and the command line."""


class CavityError(Exception):
    """Base class for all errors raised by cavity1d."""


class ConfigError(CavityError, ValueError):
    """Invalid physical or experiment configuration."""


class NumericalError(CavityError, RuntimeError):
    """A numerical backend failed to produce a trustworthy result."""


class EigensolverError(NumericalError):
    pass


class StabilityError(NumericalError):
    """Explicit integration drifted or was configured outside its stability region."""


class NoSignalError(CavityError, ValueError):
    """Analyzer atoms were read out before any light could reach them."""
