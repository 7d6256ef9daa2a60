"""Exception hierarchy.

Every error raised deliberately by the package derives from ``RarecastError``.
The CLI maps ``DataError`` to exit code 2 and ``DivergenceError`` to exit code 3.
"""


class RarecastError(Exception):
    pass


class DataError(RarecastError, ValueError):
    """Input data is malformed, inconsistent or unusable for the request."""


class InputError(DataError):
    pass


class AlignmentError(DataError):
    pass


class DimensionError(DataError):
    pass


class InsufficientHistoryError(DataError):
    pass


class DegenerateClassError(DataError):
    pass


class InfeasibleSplitError(DataError):
    pass


class CsvFormatError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class DivergenceError(RarecastError, ArithmeticError):
    def __init__(self, epoch: int, learning_rate: float, reason: str = "non-finite objective"):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"training diverged at epoch {epoch} with learning_rate={learning_rate:g} ({reason}); "
            "try a smaller --lr"
        )
