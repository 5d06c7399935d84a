"""Exception hierarchy shared across the package."""


class BettieqError(Exception):
    """Base class for all package errors."""


class InvalidInput(BettieqError):
    """Malformed argument (empty input, negative degree, r > s, ...)."""


class UnsupportedMetric(BettieqError):
    """Operation not defined for the point cloud's metric."""


class OutOfRange(BettieqError):
    """Query radius exceeds what the truncated filtration can answer."""


class TooLarge(BettieqError):
    """Brute-force oracle size cap exceeded."""


class BudgetExceeded(BettieqError):
    """Simplex or quadrature budget blown; carries diagnostics in args."""


class InvalidParam(BettieqError):
    """Parameter vector outside the family's domain."""


class UndefinedScore(BettieqError):
    """Score requested where the density vanishes or is not differentiable."""


class SamplingError(BettieqError):
    """Rejection sampler degenerated (acceptance rate below 1%)."""


class BoundaryError(BettieqError):
    """Finite-difference stencil would leave the declared domain."""


class Degenerate(BettieqError):
    """Too many skipped trials for a check to be meaningful."""


class NotInDelta(BettieqError):
    """Map fails the constant-Jacobian requirement."""


class QuadratureError(BettieqError):
    """Numerical integration failed to converge within budget."""


class ConfigError(BettieqError):
    """Invalid experiment configuration (CLI exit code 2)."""


class VerdictMismatch(BettieqError):
    """Run produced verdicts different from the expected ones (exit code 4)."""
