"""Exception types shared across the package."""


class NeedcastError(Exception):
    """Base class for all needcast errors."""


class DataError(NeedcastError):
    """Invalid or inconsistent input data (bad file, unknown id, empty set)."""


class SchemaError(DataError):
    """A file violates its declared schema; carries file and line context."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")
