"""Exception hierarchy.

Two families: :class:`DataError` for bad or insufficient input and
:class:`NumericError` for degenerate numerics. The CLI maps them to exit
codes 3 and 4.
"""


class BidScreenError(Exception):
    pass


class DataError(BidScreenError, ValueError):
    pass


class NumericError(BidScreenError, ArithmeticError):
    pass


class MissingColumn(DataError):
    pass


class NonPositiveBid(DataError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: bid value {value!r} is not a positive number")
        self.row = row
        self.value = value


class EmptyFile(DataError):
    pass


class DuplicateTenderConflict(DataError):
    pass


class TooFewBids(DataError):
    pass


class EmptyCompetitiveSet(DataError):
    pass


class EmptyPool(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class SingleClassDataset(DataError):
    pass


class EmptyAfterFilter(DataError):
    pass


class DegenerateSpec(DataError):
    pass


class EmptySample(DataError):
    pass


class UndefinedScreen(DataError):
    pass


class ZeroDispersion(NumericError):
    pass


class ZeroDenominator(NumericError):
    pass


class NonConvergence(NumericError):
    pass


class DegenerateFold(NumericError):
    pass


class TooSmallTestSplit(UserWarning):
    """Too many test splits missed one of the classes."""
