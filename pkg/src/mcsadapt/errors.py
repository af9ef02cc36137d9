"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
TrainingError -> 3.
"""


class McsAdaptError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(McsAdaptError):
    """Invalid configuration, usage, or parameter combination."""


class DataError(McsAdaptError):
    """Malformed or inconsistent input data."""


class SchemaError(DataError):
    """Input file is missing mandatory columns or has a bad header."""


class OrderingError(DataError):
    """Timestamps are not strictly increasing."""


class EmptyInputError(DataError):
    """Input file contains no usable rows."""


class TrainingError(McsAdaptError):
    """Numerical failure while fitting a model."""
