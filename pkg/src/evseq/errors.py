"""Exception taxonomy shared across the package.

Every error raised by evseq derives from :class:`EvseqError`, so callers can
catch the package's failures with a single handler while the CLI maps the
subclasses onto sysexits-style codes.
"""


class EvseqError(Exception):
    """Base class for all evseq errors."""


class DomainError(EvseqError, ValueError):
    """An argument is outside the mathematical domain of a function."""


class DataError(EvseqError, ValueError):
    """An observation violates the model's support rules."""


class ContractError(EvseqError, ValueError):
    """An API contract was violated (mismatched lengths, unsorted grid, ...)."""


class ConfigError(EvseqError, ValueError):
    """A run or simulation configuration is invalid."""


class StateError(EvseqError, RuntimeError):
    """The operation needs more data than the state currently holds."""


class RegressionStartup(StateError):
    """The regression t-statistic does not exist yet (k < 2 or b_n = 0)."""


class NumericalError(EvseqError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""
