"""Multicomponent gas-mixture diffusion: exchange rates, limit solver and finite-epsilon moment solver."""
from .collision_moments import (ExchangeRates, MaxwellianState, OracleResolution, collision_moment_oracle,
                                energy_exchange_closed, exchange_rates, i_term_decomposition,
                                momentum_exchange_closed)
from .config import RunConfig, emit_config, load_config, parse_config
from .errors import (MsmixError, NumericalError, OutputError, SingularKernelError, StabilityError,
                     ValidationError)
from .grid import Grid1D
from .macro_solver import (ClosureConfig, MacroState, SolverConfig, flux_solve, heat_step, run_macro,
                           species_step, temperature_characteristics, temperature_step_eulerian)
from .mixture import AngularKernel, DiffusionMatrix, Mixture, Species, build_diffusion_matrix, kernel_l1_norm
from .moment_solver import (ConvergenceReport, EpsSweepConfig, KineticMomentState, compare_to_limit,
                            eps_sweep, moment_step, relaxation_substep, run_moment, transport_substep)
from .scenarios import Scenario

__all__ = [
    "AngularKernel", "ClosureConfig", "ConvergenceReport", "DiffusionMatrix", "EpsSweepConfig",
    "ExchangeRates", "Grid1D", "KineticMomentState", "MacroState", "MaxwellianState", "Mixture",
    "MsmixError", "NumericalError", "OracleResolution", "OutputError", "RunConfig", "Scenario",
    "SingularKernelError", "SolverConfig", "Species", "StabilityError", "ValidationError",
    "build_diffusion_matrix", "collision_moment_oracle", "compare_to_limit", "emit_config",
    "energy_exchange_closed", "eps_sweep", "exchange_rates", "flux_solve", "heat_step",
    "i_term_decomposition", "kernel_l1_norm", "load_config", "moment_step", "momentum_exchange_closed",
    "parse_config", "relaxation_substep", "run_macro", "run_moment", "species_step",
    "temperature_characteristics", "temperature_step_eulerian", "transport_substep",
]
