"""Exception types shared across the toolkit."""


class SchemaError(ValueError):
    """Input file does not match the expected column schema."""


class DataError(ValueError):
    """A value violates a domain constraint (non-positive mid, empty day, ...)."""


class ParameterError(ValueError):
    """An operation was called with out-of-range parameters."""


class ContractError(ValueError):
    """Two inputs that must be aligned (trades vs. assignment) are not."""


class JoinError(KeyError):
    """A metaorder references daily stats that are missing or incomplete."""

    def __init__(self, ticker: str, date) -> None:
        super().__init__((ticker, date))
        self.ticker = ticker
        self.date = date

    def __str__(self) -> str:
        return f"no usable daily stats for ({self.ticker}, {self.date})"


class InsufficientDataError(ValueError):
    """Not enough points / occupied bins / positive lags for a fit."""


class FitConvergenceError(RuntimeError):
    """Nonlinear fit did not converge; carries the last iterate."""

    def __init__(self, message: str, last_params, rss: float) -> None:
        super().__init__(message)
        self.last_params = last_params
        self.rss = rss


class OracleIntegrityError(RuntimeError):
    """The simulator's self-check failed; results must not be trusted."""
