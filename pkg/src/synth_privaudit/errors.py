"""Exception types raised across the package."""


class AuditError(Exception):
    """Base class for all errors raised by synth_privaudit."""


class SchemaError(AuditError):
    """Schema declaration or column layout is inconsistent."""


class ParseError(AuditError):
    """A cell could not be parsed according to its attribute kind."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(AuditError):
    """Invalid parameters or configuration values."""


class RefusedAudit(AuditError):
    """The audit was refused because its assumptions do not hold."""

    def __init__(self, message, recommendation):
        super().__init__(message)
        self.recommendation = recommendation
