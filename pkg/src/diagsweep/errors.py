"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid problem setup (geometry, partition, config file)."""


class ModelError(ValueError):
    """Invalid medium or source specification."""


class SolverError(RuntimeError):
    """Factorization or solve failure."""
