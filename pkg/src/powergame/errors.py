"""Exception types raised by the simulator."""


class PowerGameError(Exception):
    """Base class for all package-specific errors."""


class ReceiverUnavailableError(PowerGameError):
    """The requested receiver cannot be built (e.g. decorrelator with K > N)."""


class SingularMatrixError(PowerGameError):
    """A receiver filter requires inverting a (numerically) singular matrix."""


class UndefinedUtilityError(PowerGameError):
    """Utility is undefined because transmit plus operating power is zero."""


class NoViableTransmissionError(PowerGameError):
    """Best response is undefined because the effective channel gain is zero."""


class RootFindingError(PowerGameError):
    """The target-SINR root finder failed to converge; carries the bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
