"""Measurement-induced thermodynamics of a two-level system in a bosonic bath.

Three propagation backends share one set of domain types: a second-order
rate equation with non-Markovian rates (``master_eq``), a two-quanta
wavefunction hierarchy with detector branches (``two_quanta``) and exact
propagation on a truncated Fock space (``exact_small``).
"""

__version__ = "0.1.0"

from .bath import (INF, DiscreteBath, SpectralDensity, ThermalSpectrum, beta_from_alpha,
                   bose_occupation, discretize, eval_g0, eval_gt, gibbs_excited)
from .errors import (CapacityError, ConfigError, IntegrationBlowupError, NumericalError,
                     QuadratureError, UnitarityError, ZenothermError)
from .master_eq import MEOptions, SystemState, apply_measurement, propagate, zeno_heating_check
from .rates import RatePair, RateTable, golden_rule, relaxation_rates, tabulate_rates, zeno_slope
from .schedule import MeasurementEvent, MeasurementPulse, MeasurementSchedule, pulse_profile
from .thermo import relative_entropy, sigma, spin_temperature
from .trajectory import Trajectory

__all__ = [
    "INF", "DiscreteBath", "SpectralDensity", "ThermalSpectrum", "beta_from_alpha",
    "bose_occupation", "discretize", "eval_g0", "eval_gt", "gibbs_excited",
    "CapacityError", "ConfigError", "IntegrationBlowupError", "NumericalError",
    "QuadratureError", "UnitarityError", "ZenothermError",
    "MEOptions", "SystemState", "apply_measurement", "propagate", "zeno_heating_check",
    "RatePair", "RateTable", "golden_rule", "relaxation_rates", "tabulate_rates", "zeno_slope",
    "MeasurementEvent", "MeasurementPulse", "MeasurementSchedule", "pulse_profile",
    "relative_entropy", "sigma", "spin_temperature", "Trajectory",
]
