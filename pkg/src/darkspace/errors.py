"""Exception hierarchy shared by the library and mapped to CLI exit codes."""


class DarkspaceError(Exception):
    exit_code = 2
    kind = "data"


class UsageError(DarkspaceError, ValueError):
    """Bad arguments or configuration (exit code 1)."""

    exit_code = 1
    kind = "usage"


class DataError(DarkspaceError, ValueError):
    """Input data violates a precondition or fails validation (exit code 2)."""


class DecodeError(DataError):
    """A ``.tmx`` container could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset
