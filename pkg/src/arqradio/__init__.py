"""Opportunistic secondary transmission over a primary ARQ link."""

from .analysis import stationary_numeric, transmit_probability, validity_bound
from .channel import Dmc, Scenario, builtin_scenario, load_scenario, validate_scenario
from .errors import ArqRadioError, ConfigurationError, DomainError, PlanningError
from .harness import aggregate, empirical_validity, merge, run_episode, wilson_interval
from .protocols import ProtocolParams, default_params
from .rib import rib

__all__ = [
    "ArqRadioError",
    "ConfigurationError",
    "Dmc",
    "DomainError",
    "PlanningError",
    "ProtocolParams",
    "Scenario",
    "aggregate",
    "builtin_scenario",
    "default_params",
    "empirical_validity",
    "load_scenario",
    "merge",
    "rib",
    "run_episode",
    "stationary_numeric",
    "transmit_probability",
    "validate_scenario",
    "validity_bound",
    "wilson_interval",
]
__version__ = "0.1.0"
