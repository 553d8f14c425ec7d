"""
Exception types shared by every module of the Chow-Künneth workbench.

Library code raises these; the command-line pipeline catches them per task and
turns them into failed checks (exit code 1) or configuration errors (exit code 2).
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class AmbientMismatchError(WorkbenchError):
    """Operands live on different Chow data, or vector sizes disagree."""


class UnsupportedDatumError(WorkbenchError):
    """The datum lacks the structure an operation needs (e.g. Künneth data)."""


class InvalidDatumError(WorkbenchError):
    """Structure constants, maps or projector lists violate their invariants."""


class InvalidActionError(WorkbenchError):
    """A group action is not a finite group of degree-preserving ring automorphisms."""


class InvalidCenterError(WorkbenchError):
    """A blow-up center is not a degree-one point class of the base."""


class DegenerateMultiplierError(WorkbenchError):
    """The exceptional self-intersection multiplier is zero."""


class NotInBError(WorkbenchError):
    """A correspondence expected in B has a nonzero pushforward to the base."""


class InconsistentTauError(WorkbenchError):
    """A tau pair does not reconstruct the correspondence it was built for."""


class ConstructionViolationError(WorkbenchError):
    """The projector lift produced something that is not idempotent/orthogonal."""


class ConfigError(WorkbenchError):
    """Base class for run-configuration problems."""


class ConfigParseError(ConfigError):
    """The configuration text does not match the grammar."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigSemanticError(ConfigError):
    """The configuration parses but a field holds an unusable value."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
