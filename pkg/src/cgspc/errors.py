"""Exception hierarchy shared by every module of the package."""


class CgsError(Exception):
    """Base class for all errors raised by cgspc."""


class InputError(CgsError):
    """Malformed input: unknown agent, state outside the atom universe, bad file."""


class PreconditionError(CgsError):
    """An operation was called with arguments violating its contract."""


class TotalityError(CgsError):
    """A table transition has no row for a (state, joint action) pair."""


class ResourceError(CgsError):
    """A configured size cap (atoms, strategies) was exceeded."""


class FormulaSyntaxError(InputError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column
