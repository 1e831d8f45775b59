"""Exception types shared across the package."""


class MinkflowError(Exception):
    """Base class for all solver errors."""


class NonPositiveRadius(MinkflowError):
    """The radial boundary function dips to zero or below."""


class NotStrictlyConvex(MinkflowError):
    """The boundary curvature is not strictly positive everywhere."""


class ResolutionTooLow(MinkflowError):
    """Grid resolution below the supported minimum."""


class MissingGhostRow(MinkflowError):
    """A derivative was requested on a field without a closed ghost row."""


class SpacelikeLost(MinkflowError):
    """The graph gradient reached the light cone (1 - |Du|^2 below floor)."""

    def __init__(self, message, node=None, time=None, margin=None):
        super().__init__(message)
        self.node = node
        self.time = time
        self.margin = margin


class TangentTooSteep(MinkflowError):
    """Tangential boundary slope |q| >= 1; the oblique closure is unsolvable."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NonFinite(MinkflowError):
    """NaN or Inf appeared in the evolving field."""

    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class NotSpacelike(MinkflowError):
    """Requested slope vector has |a| >= 1."""


class ShootingFailed(MinkflowError):
    """No bracket for the translator speed could be established."""


class ParseError(MinkflowError):
    """Configuration text could not be parsed."""


class ValidationError(MinkflowError):
    """A configuration field failed validation."""

    def __init__(self, field, message=None):
        super().__init__(message or f"invalid value for {field}")
        self.field = field
