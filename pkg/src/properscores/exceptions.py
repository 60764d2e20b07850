"""Exception hierarchy shared across the package."""


class ScoringError(Exception):
    """Base class for errors raised by properscores."""


class SupportError(ScoringError, ValueError):
    """Observation lies outside the support of a discrete distribution."""


class UnsupportedDistribution(ScoringError, TypeError):
    """The rule cannot be evaluated for this distribution type (e.g. log-score on an ensemble)."""


class DegenerateDistribution(ScoringError, ValueError):
    """E_{P,P}[g(X,Y)] is zero, so standardized scores are undefined.

    Use a generalized kernel score with ``HFunction.shifted_log(gamma)`` instead.
    """


class NonFiniteExpectation(ScoringError, ArithmeticError):
    """A kernel expectation is infinite or could not be estimated to a finite value."""


class WeightSumError(ScoringError, ValueError):
    """Weights passed to a negative-definiteness check do not sum to zero."""


class SignError(ScoringError, ValueError):
    """A score expected to be strictly negative was not."""


class NoiseDominated(ScoringError, RuntimeError):
    """Monte Carlo noise is too large relative to the signal being estimated."""


class NotPositiveDefinite(ScoringError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""


class NonConvergence(ScoringError, RuntimeError):
    """An iterative fitter hit its iteration limit.

    The last iterate is kept on ``last_iterate`` so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ObservationError(ScoringError):
    """Wraps an error raised while scoring one observation of a dataset."""

    def __init__(self, index, cause):
        super().__init__(f"observation {index}: {cause}")
        self.index = index
        self.cause = cause


class ExperimentError(ScoringError):
    """Wraps an error raised inside one replicate of an experiment."""

    def __init__(self, replicate, cause):
        super().__init__(f"replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause
