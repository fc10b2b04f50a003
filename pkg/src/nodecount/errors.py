"""Exception hierarchy shared by all modules."""


class NodeCountError(Exception):
    """Base class for every error raised by the package."""


class DataError(NodeCountError):
    """Invalid input data (CSV rows, label domains, empty datasets)."""


class MalformedRow(DataError):
    def __init__(self, line: int, field: str, message: str):
        self.line = line
        self.field = field
        super().__init__(f"line {line}, field {field!r}: {message}")


class DomainError(MalformedRow):
    """An enumerated field holds a value outside its domain."""


class NonPositiveEta(MalformedRow):
    pass


class InvalidLabel(MalformedRow):
    pass


class ClassAbsent(DataError):
    """A class required by the operation has no (or too few) examples."""


class DimensionMismatch(NodeCountError, ValueError):
    pass


class InvalidK(NodeCountError, ValueError):
    pass


class ConfigError(NodeCountError, ValueError):
    """Invalid experiment or generator configuration."""
