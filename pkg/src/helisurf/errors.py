"""Exception hierarchy.

``UserInputError`` subclasses map to CLI exit code 2 (bad input); everything
else that escapes maps to exit code 1.
"""


class HelisurfError(Exception):
    """Base class for all toolkit errors."""


class UserInputError(HelisurfError):
    """Invalid user-supplied data, configuration, or arguments."""


class InvalidGeometryError(UserInputError):
    """Degenerate or unphysical resonator geometry."""


class OutOfDomainError(UserInputError):
    """Input outside the validity domain of a physical model."""


class InvalidScenarioError(UserInputError):
    """Inconsistent fluctuation or condensation scenario."""


class InsufficientDataError(UserInputError):
    """Too little data for the requested operation."""


class InitializationError(UserInputError):
    """Automatic fit initialization failed (e.g. featureless data)."""


class CalibrationError(UserInputError):
    """Missing or unusable calibration (e.g. zero probe slope)."""


class InvalidBandError(UserInputError):
    """Empty or out-of-range integration band."""


class InvalidComparisonError(UserInputError):
    """Reports are not comparable (e.g. different bands)."""


class ConfigError(UserInputError):
    """Scenario-file parse or validation error, with location."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")
