"""Distributed Nash equilibrium seeking with sinusoidal perturbations."""

from .analysis import (BoundConstants, EnvelopeFitError, convergence_time, corollary2_bound,
                       decompose, fit_stability_envelope, lipschitz_estimate,
                       martingale_diagnostics, stability_envelope, theorem1_bound)
from .config import ConfigError, ExperimentConfig, load_config, reference_config, save_config
from .game import (GameModel, PerturbationParams, ScriptedGame, StepSchedule, khat,
                   perturbation_signal, validate_assumptions, validate_frequencies)
from .ode import (compare_window, gap_sweep, integrate_deterministic, integrate_stochastic,
                  interpolate, sup_gap)
from .quadratic import QuadraticGame
from .seeker import NumericalAbort, SeekerConfig, Trajectory, baseline_gradient_ascent, run
from .wireless import (EquilibriumError, WirelessGame, WirelessParams, analytic_equilibrium,
                       default_settings)

__version__ = "0.1.0"

__all__ = [
    "BoundConstants", "EnvelopeFitError", "convergence_time", "corollary2_bound", "decompose",
    "fit_stability_envelope", "lipschitz_estimate", "martingale_diagnostics",
    "stability_envelope", "theorem1_bound", "ConfigError", "ExperimentConfig", "load_config",
    "reference_config", "save_config", "GameModel", "PerturbationParams", "ScriptedGame",
    "StepSchedule", "khat", "perturbation_signal", "validate_assumptions",
    "validate_frequencies", "compare_window", "gap_sweep", "integrate_deterministic",
    "integrate_stochastic", "interpolate", "sup_gap", "QuadraticGame", "NumericalAbort",
    "SeekerConfig", "Trajectory", "baseline_gradient_ascent", "run", "EquilibriumError",
    "WirelessGame", "WirelessParams", "analytic_equilibrium", "default_settings",
]
