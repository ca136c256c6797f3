"""Python access to the lpsim core library."""

from ._core import (
    ConfigError,
    ConvergenceError,
    Coupling,
    Error,
    FriedrichsModel,
    ResonancePole,
    Sheet,
    SurvivalMethod,
    TimeGrid,
    bound_states,
    decay_probability,
    effectively_pure,
    find_resonance_pole,
    list_scenarios,
    liouville_offdiagonal_mass,
    purity,
    reduced_density,
    run_config,
    self_energy,
    spectral_weight,
    survival_curve,
)

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "Coupling",
    "Error",
    "FriedrichsModel",
    "ResonancePole",
    "Sheet",
    "SurvivalMethod",
    "TimeGrid",
    "bound_states",
    "decay_probability",
    "effectively_pure",
    "find_resonance_pole",
    "list_scenarios",
    "liouville_offdiagonal_mass",
    "purity",
    "reduced_density",
    "run_config",
    "self_energy",
    "spectral_weight",
    "survival_curve",
]
