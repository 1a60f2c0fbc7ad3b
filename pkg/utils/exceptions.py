class ContractException(ValueError):
    """Raised when an operation is called outside its preconditions"""


class DegenerateLabelsException(ContractException):
    """Raised when a labeled set carries fewer than two classes"""


class NumericalFailureException(ArithmeticError):
    """Raised when a loss, gradient or intermediate value is not finite"""

    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment


class FormatException(ValueError):
    """Raised when a data file does not match its declared format"""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class AssumptionViolatedException(ValueError):
    """Raised when theory inputs break one of the bound's assumptions"""
