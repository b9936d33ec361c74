"""Exception hierarchy for miso_lab."""


class MisoLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(MisoLabError, ValueError):
    pass


class InvalidInputError(MisoLabError, ValueError):
    pass


class DomainError(MisoLabError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InvalidStateError(MisoLabError, ValueError):
    pass


class BlockExhaustedError(MisoLabError, RuntimeError):
    """All T_c channel uses of the current coherence block were consumed."""


class ZeroEstimateError(MisoLabError, ArithmeticError):
    """Beamforming direction undefined because the channel estimate is 0."""


class DegenerateConfigError(MisoLabError, ValueError):
    """Training would occupy the whole coherence block (no data phase)."""


class NumericalFailureError(MisoLabError, ArithmeticError):
    pass
