"""Exception hierarchy shared by the library and the command-line tool."""


class WsrSimError(Exception):
    """Base class for all errors raised by wsrsim."""


class ValidationError(WsrSimError, ValueError):
    """Invalid parameters or configuration.

    ``path`` names the offending field (``"traj_i.radius"``) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DatasetError(WsrSimError):
    """A dataset on disk is malformed or fails an invariant check.

    ``row`` is the 1-based data row (header excluded) when the problem is
    localized to a single record.
    """

    def __init__(self, message: str, file: str | None = None, row: int | None = None):
        self.file = file
        self.row = row
        where = file or ""
        if row is not None:
            where = f"{where} row {row}" if where else f"row {row}"
        super().__init__(f"{where}: {message}" if where else message)


class DatasetIOError(WsrSimError, OSError):
    """Reading or writing a dataset file failed at the OS level."""

    def __init__(self, message: str, file: str):
        self.file = file
        super().__init__(f"{file}: {message}")


class SchemaVersionError(DatasetError):
    """Manifest written with an unsupported schema major version."""


class InvariantError(WsrSimError):
    """Internal consistency check failed; indicates a bug, not bad input."""
