"""Exception types raised across the package."""


class AlchemicalError(Exception):
    """Base class for all package errors."""


class UnsupportedSpeciesError(AlchemicalError, ValueError):
    pass


class ParseError(AlchemicalError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ShapeError(AlchemicalError, ValueError):
    pass


class ArchiveFormatError(AlchemicalError, ValueError):
    pass


class DegenerateBasisError(AlchemicalError, ValueError):
    pass


class SingularGeometryError(AlchemicalError, ValueError):
    pass


class CapacityError(AlchemicalError, ValueError):
    pass


class NumericalError(AlchemicalError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        if self.diagnostics:
            message += " | " + ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        super().__init__(message)
