"""Exception hierarchy.

Every error raised by the library derives from :class:`RevivalError`.  The
three subclasses below map onto the CLI exit codes (2, 3, 4).
"""


class RevivalError(Exception):
    """Base class for all library errors."""


class ConfigError(RevivalError, ValueError):
    """Invalid input or configuration (bad index, bad parameter, bad file)."""


class NumericalError(RevivalError, ArithmeticError):
    """A numeric procedure failed (degenerate spectrum, no root, undefined scale)."""


class ResolutionError(RevivalError):
    """Sampling or window is too coarse or too short for the requested analysis."""


class InvalidIndexError(ConfigError):
    pass


class DegenerateSpectrumError(NumericalError):
    pass


class UndefinedScaleError(NumericalError):
    pass


class RatioBoundError(ConfigError):
    pass


class DivergentMomentError(NumericalError):
    pass


class NoRootError(NumericalError):
    pass
