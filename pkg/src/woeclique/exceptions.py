"""Exception hierarchy. Each family maps to one CLI exit code."""


class WoECliqueError(Exception):
    exit_code = 1


class ConfigError(WoECliqueError):
    exit_code = 2


class DataError(WoECliqueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingTargetError(DataError):
    def __init__(self, rows):
        self.rows = list(rows)
        preview = ", ".join(str(r) for r in self.rows[:20])
        more = "" if len(self.rows) <= 20 else f" (+{len(self.rows) - 20} more)"
        super().__init__(f"missing target value in rows: {preview}{more}")


class DegenerateDataError(DataError):
    """Raised when a dataset or target leaves fewer than two classes."""


class SchemaError(DataError):
    pass


class InfeasibleBinningError(DataError):
    def __init__(self, message, constraint):
        super().__init__(message)
        self.constraint = constraint


class NumericError(WoECliqueError):
    exit_code = 4


class InfiniteWoEError(NumericError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, last_iterate=None, gradient_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient_norm = gradient_norm


class UnreliableCIError(NumericError):
    pass


class UnseenCategoryWarning(UserWarning):
    """Values never seen at fit time were mapped to neutral evidence (WoE 0)."""
