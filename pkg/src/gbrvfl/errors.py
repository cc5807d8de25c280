"""Exception hierarchy shared by every module.

Each error carries a ``kind`` (the class name) so the CLI can emit a
structured error document without a lookup table.
"""


class GBRVFLError(Exception):
    """Base class for all domain errors raised by the package."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class MissingFile(GBRVFLError):
    pass


class RaggedRows(GBRVFLError):
    pass


class NonNumericFeature(GBRVFLError):
    def __init__(self, value, row, column):
        self.value = value
        self.row = row
        self.column = column
        super().__init__(f"non-numeric or non-finite feature {value!r} at row {row}, column {column}")


class SingleClass(GBRVFLError):
    pass


class TooFewSamples(GBRVFLError):
    pass


class DegenerateSplit(GBRVFLError):
    pass


class DimensionMismatch(GBRVFLError):
    pass


class NumericalFailure(GBRVFLError):
    pass


class VersionMismatch(GBRVFLError):
    pass


class CorruptFile(GBRVFLError):
    pass


class LengthMismatch(GBRVFLError):
    pass


class TargetLarger(GBRVFLError):
    pass


class ShapeMismatch(GBRVFLError):
    pass


class InvalidArgument(GBRVFLError):
    """A value violates a documented precondition (e.g. Friedman with < 3 models)."""
