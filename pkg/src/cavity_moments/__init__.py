"""Steady-state photon statistics of a driven emitter ensemble in a lossy cavity."""

__version__ = "0.1.0"

from .closed_forms import closed_form_g2, closed_form_intensity
from .errors import CavityError
from .moments import (
    MomentIndex,
    Observables,
    build_moment_system,
    evolve_moments,
    observables,
    solve_moments,
    solve_steady_state,
)
from .params import SpinMoments, SystemParams, load_scenario, spin_moments, validate_regime

__all__ = [
    "__version__",
    "CavityError",
    "SystemParams",
    "SpinMoments",
    "spin_moments",
    "validate_regime",
    "load_scenario",
    "MomentIndex",
    "Observables",
    "build_moment_system",
    "solve_steady_state",
    "observables",
    "evolve_moments",
    "solve_moments",
    "closed_form_g2",
    "closed_form_intensity",
]
