"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError`; the CLI maps
it to exit status 1.  Bad user input derives from :class:`ConfigError`
(exit status 2).
"""


class QPRenormError(Exception):
    """Base class for all package errors."""


class NumericalError(QPRenormError):
    pass


class ConfigError(QPRenormError):
    pass


class ContainmentViolation(NumericalError):
    """An inner function leaves the disc on which the outer one is expanded."""


class DegenerateScaling(NumericalError):
    """The rescaling factor a = psi(1) is (numerically) zero."""


class InsufficientTail(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class BracketMiss(NumericalError):
    pass


class SpectrumAnomaly(NumericalError):
    pass


class InclusionFailure(NumericalError):
    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class NoCycle(NumericalError):
    pass


class ZeroSectionValue(NumericalError):
    pass


class ZeroImage(NumericalError):
    pass


class NoConvergenceQR(NumericalError):
    pass


class MatchFailure(NumericalError):
    pass


class PowerIterationDivergence(NumericalError):
    pass


class CurveSolveFailure(NumericalError):
    pass


class ResonantDenominator(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    pass


class ParameterOutOfRange(ConfigError):
    pass


class SchemaMismatch(ConfigError):
    pass


class AliasWarning(UserWarning):
    pass


class EmbeddingOverlap(UserWarning):
    pass
