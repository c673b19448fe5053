"""Exception hierarchy shared by all modules."""


class LaxShortcutsError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(LaxShortcutsError, ValueError):
    pass


class NumericError(LaxShortcutsError, ArithmeticError):
    pass


class DegenerateSolitonError(InvalidArgumentError):
    pass


class BoxTooSmallError(LaxShortcutsError):
    pass


class StepSizeError(LaxShortcutsError):
    pass


class CapabilityError(LaxShortcutsError):
    pass


class DivergenceError(LaxShortcutsError):
    pass


class DegenerateSpectrumError(LaxShortcutsError):
    pass


class PreconditionError(LaxShortcutsError):
    pass
