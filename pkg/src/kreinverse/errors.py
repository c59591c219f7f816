"""Exception hierarchy shared by all modules."""


class KreinError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(KreinError):
    """A convergent series did not reach its tolerance within the term budget."""


class DivergentTail(KreinError):
    """An asymptotic series grows from its very first correction term."""


class SchemaError(KreinError):
    """A configuration document is missing a field or carries a wrong unit tag."""


class ContinuityError(KreinError):
    """Adjacent g(k) segments leave a gap or jump at a shared boundary."""


class ToleranceNotMet(KreinError):
    """A numerical oracle could not certify its requested accuracy."""


class NotMultipleOfThree(KreinError):
    """The composite 3/8 rule needs a panel count divisible by three."""


class SingularMatrix(KreinError):
    """A pivot fell below the relative threshold during elimination."""


class GridTooCoarse(KreinError):
    """Too few samples to form the requested finite difference."""


class OffGrid(KreinError):
    """A requested abscissa does not coincide with a table node."""


class Overflow(KreinError):
    """An exponentially growing quantity would exceed double range."""


class NonPositiveDenominator(KreinError):
    """1 + C * int(phi^2) is not positive; the norming constant is invalid."""


class DegenerateGammas(KreinError):
    """Two bound states share the same decay wavenumber."""


class TailTooShort(KreinError):
    """The eigenfunction has not decayed by the end of the grid."""


class NoAsymptoticRegion(KreinError):
    """The potential has not died out at the end of the grid."""


class DegenerateParameters(KreinError):
    """Parameters make a transform singular (for example a == b)."""


class NoRootInBracket(KreinError):
    """No admissible root of the seed equation was found."""


class BlowUp(KreinError):
    """The Riccati solution ran into a pole."""


class NoSignChange(KreinError):
    """A root bracket has residuals of equal sign at both ends."""
