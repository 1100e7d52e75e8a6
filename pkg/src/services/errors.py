"""
Error types for the Virasoro toolkit.

Every error is a ValueError so callers that only know about ValueError
(the CLI, the verification runner) can treat them uniformly.
"""


class VirasoroError(ValueError):
    """Base class for all toolkit errors"""


class DivisionByZero(VirasoroError, ZeroDivisionError):
    """Division by an exact zero"""


class NotRational(VirasoroError):
    """A quadratic-field value with a non-zero irrational part was used as a rational"""


class AmbientMismatch(VirasoroError):
    """Values from different ambient spaces were combined (QuadExt fields, Verma or Fock modules)"""


class VariableMismatch(VirasoroError):
    """Formal series in different variables were combined"""


class InvalidParameters(VirasoroError):
    """(p, q) does not define a central charge c_{p,q}"""


class NoSingularVector(VirasoroError):
    """No singular vector with the required shape exists at the requested level"""


class NotKacWeight(VirasoroError):
    """A conformal weight is not of the form h_{r,s}"""


class InadmissibleBranch(VirasoroError):
    """The intertwiner recursion hits a vanishing left factor"""


class LevelTooSmall(VirasoroError):
    """The requested truncation level cannot see the relevant singular vector"""


class InvalidP(VirasoroError):
    """The hypergeometric check needs an odd p >= 3"""
