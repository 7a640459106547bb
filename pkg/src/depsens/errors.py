"""Exception and warning classes raised by depsens."""


class DepsensError(ValueError):
    """Base class for all depsens errors."""


class MissingFile(DepsensError, FileNotFoundError):
    pass


class RaggedRows(DepsensError):
    def __init__(self, path, row, expected, got):
        self.row = row
        super().__init__(
            f"{path}: row {row} has {got} fields, expected {expected}"
        )


class NonNumericCell(DepsensError):
    def __init__(self, path, row, col, text):
        self.row = row
        self.col = col
        super().__init__(
            f"{path}: non-numeric cell {text!r} at row {row}, column {col}"
        )


class InvalidBounds(DepsensError):
    pass


class InvalidData(DepsensError):
    pass


class ZeroBandwidth(DepsensError):
    pass


class KindMismatch(DepsensError):
    pass


class BadAlpha(DepsensError):
    pass


class BadComponents(DepsensError):
    pass


class SizeMismatch(DepsensError):
    pass


class DegenerateSample(DepsensError):
    pass


class BadK(DepsensError):
    pass


class ZeroVariance(DepsensError):
    pass


class BadB(DepsensError):
    pass


class BadM(DepsensError):
    pass


class DimMismatch(DepsensError):
    pass


class NoReference(DepsensError):
    pass


class ConfigError(DepsensError):
    """Configuration validation failure; ``problems`` lists every finding."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class EstimationError(DepsensError):
    """An index could not be computed; names the index, input and replicate."""

    def __init__(self, index, input_name, replicate, reason):
        self.index = index
        self.input_name = input_name
        self.replicate = replicate
        where = f"index {index!r}"
        if input_name is not None:
            where += f", input {input_name!r}"
        super().__init__(f"{where}, replicate {replicate}: {reason}")


class RankDeficientWarning(UserWarning):
    """Fewer usable principal components than requested."""


class NonConvergenceWarning(UserWarning):
    """Coordinate descent hit its sweep limit before the tolerance."""
