"""Exception types shared across the package."""


class RWREError(Exception):
    """Base class for all package errors."""


class ValidationError(RWREError, ValueError):
    """Invalid distribution, window, or configuration."""


class NoRoot(RWREError):
    """E[rho^s] = 1 has no positive root (no atom with rho > 1)."""


class OutOfWindow(RWREError, IndexError):
    """A site outside the sampled window was requested."""


class BlockOverflow(RWREError):
    """A ladder block exceeded the length cap while sampling."""


class QuenchedOverflow(RWREError, OverflowError):
    """An intermediate sum or product exceeded 1e300."""


class ConditionViolated(RWREError):
    """The positivity condition of a moment-generating bound fails."""


class NoBoundedSolution(RWREError):
    """The hitting-time MGF linear system has no positive solution."""


class WindowEscape(RWREError):
    """A simulated walk left the sampled window."""


class InsufficientBlocks(RWREError):
    """Not enough ladder blocks for the requested coarse-graining."""


class TooFewExceedances(RWREError):
    """Too few order statistics above the threshold for a tail estimate."""
