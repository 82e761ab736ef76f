"""Exception and warning types shared across the package."""


class ContractError(ValueError):
    """An operation was called with inputs that violate its preconditions."""


class SolveError(ArithmeticError):
    """A quantum linear solve could not produce a usable state."""


class ParseError(ValueError):
    """Malformed input file; carries the offending location when known."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConvergenceWarning(UserWarning):
    pass


class DegeneracyWarning(UserWarning):
    pass


class StageError(RuntimeError):
    """Wraps a failure inside a pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
