"""Adaptive interconnected estimation layer: gains, loops, and streaming runner."""

from .core import (InterconnectedObserver, Measurement, ObserverState,
                   adapt_theta1, adapt_theta2, anode_observer_step,
                   cathode_observer_step, initial_observer_state,
                   observer_output)
from .gains import (GainCondition, GainValidationReport, GatingConfig,
                    ObserverGains, capacity_tracking_gains, default_alpha_q2,
                    default_h_tolerances, default_slope_bounds, design_gains,
                    diffusivity_identification_gains, load_gains,
                    load_reference_gains, reference_gains_path, save_gains,
                    stoichiometric_cross_ratio, validate_gains,
                    with_gain_overrides)
from .runner import (EstimateTrajectory, PersistenceReport, composite_lyapunov,
                     load_measurement_stream, persistence_of_excitation_check,
                     run_observer, save_measurement_stream)

__all__ = [
    "InterconnectedObserver", "Measurement", "ObserverState",
    "adapt_theta1", "adapt_theta2", "anode_observer_step",
    "cathode_observer_step", "initial_observer_state", "observer_output",
    "GainCondition", "GainValidationReport", "GatingConfig", "ObserverGains",
    "capacity_tracking_gains", "default_alpha_q2", "default_h_tolerances",
    "default_slope_bounds", "design_gains", "diffusivity_identification_gains",
    "load_gains", "load_reference_gains", "reference_gains_path", "save_gains",
    "stoichiometric_cross_ratio", "validate_gains", "with_gain_overrides",
    "EstimateTrajectory", "PersistenceReport", "composite_lyapunov",
    "load_measurement_stream", "persistence_of_excitation_check",
    "run_observer", "save_measurement_stream",
]
