"""Domain exceptions for EMOS fitting, pooling and verification.

All errors derive from ``ValueError`` so that callers treating invalid input
generically keep working; the CLI maps them to exit code 1, except
``ConvergenceError`` which maps to exit code 2.
"""


class PoolingError(ValueError):
    """Base class for all domain errors raised by this package."""


class ParameterDomainError(PoolingError):
    """Distribution or link parameters fall outside their admissible domain."""


class GridError(PoolingError):
    """An observation lies outside the integration grid used for quadrature."""


class DegenerateEnsembleError(PoolingError):
    """Ensemble has fewer than two members."""


class DegenerateWindowError(PoolingError):
    """Training window cannot identify the model (empty or constant)."""


class DegenerateVarianceError(PoolingError):
    """Score differences have zero variance, so the DM statistic is undefined."""


class BlockLengthError(PoolingError):
    """Bootstrap block is longer than the number of available days."""


class MissingCoefficientsError(PoolingError):
    """Component coefficients are missing for a day the caller needs."""


class DatasetError(PoolingError):
    """Input data does not match the documented schema.

    Attributes:
        row: 1-based data row number the problem was detected on, if known
    """

    def __init__(self, message: str, row: int | None = None) -> None:
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConvergenceError(PoolingError):
    """Optimizer did not converge and strict mode is enabled."""


class PipelineError(PoolingError):
    """A pipeline stage failed.

    Attributes:
        stage: Name of the stage that failed (train, combine, verify, report)
    """

    def __init__(self, stage: str, message: str) -> None:
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class ConvergenceWarning(UserWarning):
    """Optimizer stopped before convergence; best-so-far values were returned."""
