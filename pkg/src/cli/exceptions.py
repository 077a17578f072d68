"""Exception classes for the command-line interface."""


class CLIError(Exception):
    """Base exception class for command-line errors."""

    def __init__(self, message: str, code: int):
        """Initialize the command-line error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class ConfigError(CLIError):
    """Exception raised for an invalid run configuration or output directory."""

    def __init__(self, message: str):
        super().__init__(message, code=2)


class ReportError(CLIError):
    """Exception raised when curve tables cannot be reported or figures cannot be written."""

    def __init__(self, message: str):
        super().__init__(message, code=6)
