"""
kinetra: modelos cinéticos de tráfico con velocidades discretas, su análisis de
estabilidad de Chapman-Enskog y solvers 1D cinético, en el espacio w y microscópico.
"""

__version__ = "0.1.0"

from .closures import (AccelerationLaw, ConstantFunction, DensityFunction, LinearSpeed, PowerLaw, SaturatingAccelerationLaw,
                       TabulatedFunction, validate_hesitation, validate_pressure)
from .config import ScenarioConfig, load_config, parse_config
from .equilibrium import (MaxwellianTable, build_maxwellian_table, d_rho_moments, fundamental_diagram,
                          interpolate_maxwellian, relax_to_equilibrium, vacuum_limit)
from .exceptions import (CFLError, CollisionError, ConfigIssue, ConfigurationError, ConvergenceError,
                         DomainError, KinetraError, SolverAbort)
from .kinetic_core import (KineticState, ModelParams, VelocityGrid, build_grid, build_interaction_tables,
                           collision_operator, moments)
from .micro_ftl import MicroParams, VehicleArray, local_density, macro_profile, run_micro, step, uniform_ring
from .solver1d import (EpsilonModel, KineticField, Mesh1D, collision_step_bgk, collision_step_boltzmann,
                       compute_rho_x, eval_epsilon, run, run_equilibrium_law, transport_step)
from .stability import Classification, ModelKind, classify, diffusion_profile, mu_arz, mu_bgk, mu_modified
from .wspace import GField, WGrid, build_mg, build_wgrid, run_wspace

__all__ = [
    "__version__",
    "AccelerationLaw", "ConstantFunction", "DensityFunction", "LinearSpeed", "PowerLaw", "SaturatingAccelerationLaw",
    "TabulatedFunction",
    "validate_hesitation", "validate_pressure",
    "ScenarioConfig", "load_config", "parse_config",
    "MaxwellianTable", "build_maxwellian_table", "d_rho_moments", "fundamental_diagram",
    "interpolate_maxwellian", "relax_to_equilibrium", "vacuum_limit",
    "CFLError", "CollisionError", "ConfigIssue", "ConfigurationError", "ConvergenceError", "DomainError",
    "KinetraError", "SolverAbort",
    "KineticState", "ModelParams", "VelocityGrid", "build_grid", "build_interaction_tables",
    "collision_operator", "moments",
    "MicroParams", "VehicleArray", "local_density", "macro_profile", "run_micro", "step", "uniform_ring",
    "EpsilonModel", "KineticField", "Mesh1D", "collision_step_bgk", "collision_step_boltzmann",
    "compute_rho_x", "eval_epsilon", "run", "run_equilibrium_law", "transport_step",
    "Classification", "ModelKind", "classify", "diffusion_profile", "mu_arz", "mu_bgk", "mu_modified",
    "GField", "WGrid", "build_mg", "build_wgrid", "run_wspace",
]
