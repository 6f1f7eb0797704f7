"""Exception hierarchy shared by all modules."""


class ArqRadioError(Exception):
    """Base class for package errors."""


class ConfigurationError(ArqRadioError, ValueError):
    """Malformed channel, profile, scenario or parameter set."""


class DomainError(ArqRadioError, ValueError):
    """Arguments outside the domain where a formula is defined."""


class DegenerateChainError(DomainError):
    """Markov chain parameters at a reducible corner."""


class PlanningError(ArqRadioError, RuntimeError):
    """An experiment cannot be realized within configured resources."""
