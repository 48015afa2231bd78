"""Workbench error types.

Every error carries an ``exit_code`` that the CLI returns to the shell, the
way the HTTP services map failures to status codes.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


class WorkbenchError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = EXIT_FAILURE

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class ConfigError(WorkbenchError):
    """Experiment configuration is invalid."""

    exit_code = EXIT_CONFIG_ERROR


class ArtifactIOError(WorkbenchError):
    """A run artifact could not be read or written."""

    exit_code = EXIT_IO_ERROR


class GenotypeFormatError(ArtifactIOError):
    """A serialized genotype is malformed."""


class CheckpointVersionError(ArtifactIOError):
    """Checkpoint format version does not match this build."""


class CorruptCheckpointError(ArtifactIOError):
    """Checkpoint payload failed its integrity check."""


class SchemaMismatchError(WorkbenchError):
    """Run logs that cannot be pooled were passed to the same analysis."""

    exit_code = EXIT_CONFIG_ERROR


class BudgetExhaustedError(WorkbenchError):
    """The evaluation budget cannot cover the requested evaluations."""

    def __init__(self, requested: int, used: int, budget: int) -> None:
        super().__init__(
            f"Evaluation budget exhausted: {used} used, {requested} requested, budget {budget}"
        )
        self.requested = requested
        self.used = used
        self.budget = budget


class UndefinedDiversityError(WorkbenchError):
    """Diversity needs at least two individuals."""


class InvalidMorphologyError(WorkbenchError):
    """A morphology lies outside its segment bounds."""


class UnsupportedEnvironmentError(WorkbenchError):
    """An environment uses features outside the requested feature set."""


class InvalidShapeError(WorkbenchError):
    """A body polygon is degenerate, self-intersecting or not convex."""
