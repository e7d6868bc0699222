"""Exception types raised while loading and compiling configurations."""


class PsfpError(Exception):
    """Base class for configuration errors.

    ``code`` is a stable diagnostic identifier (``HyperperiodOutOfRange``,
    ``EntryBudgetExceeded`` ...), printed by the CLI next to the message.
    """

    code = "PsfpError"

    def __init__(self, message, *, path=None):
        super().__init__(message)
        self.message = message
        self.path = path

    def __str__(self):
        return f"{self.code}: {self.message}"


class HyperperiodOutOfRange(PsfpError):
    code = "HyperperiodOutOfRange"


class EntryBudgetExceeded(PsfpError):
    code = "EntryBudgetExceeded"


class StreamTableCapacityExceeded(PsfpError):
    code = "StreamTableCapacityExceeded"


class GranularityError(PsfpError):
    code = "SliceBoundaryGranularity"


class ConfigError(PsfpError):
    code = "ConfigError"


class ScenarioError(Exception):
    """A scenario file failed validation; carries every diagnostic found."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))
