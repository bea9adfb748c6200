"""Exception hierarchy shared across the package."""


class HodgeHardyError(ValueError):
    """Base class for every error raised by hodgehardy."""


class ComplexError(HodgeHardyError):
    """Invalid complex data: schema, measure, metric or connectivity."""


class SymbolError(HodgeHardyError):
    """A symbol cannot be used for the requested calculus operation."""


class AdmissibilityError(HodgeHardyError):
    """A symbol's decay class is too weak for the requested exponent p."""


class ProbeError(HodgeHardyError):
    """Invalid probe request (overlapping sets, empty battery, ...)."""
