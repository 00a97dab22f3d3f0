"""SAV finite-element simulation of the volume-filling Keller-Segel model."""
from ._backend import BACKEND
from .assembly import (
    AssembledOperators,
    assemble_mass,
    assemble_mobility_stiffness,
    assemble_operators,
    assemble_stiffness,
    dump_coo,
    lump_mass,
)
from .config import ConfigError, SimConfig, load_config
from .diagnostics import EnergyRecord, StabilityReport, discrete_energy, dissipation, mass, stability_conditions
from .mesh import (
    Mesh,
    MeshError,
    MeshMetrics,
    build_interval_mesh,
    build_rect_mesh,
    check_acute,
    compute_metrics,
    export_csv,
)
from .model import ModelParams, F_reg, energy_E1, g_reg, phi, r_init, s_vector
from .simulate import RunResult, initial_state, run
from .stepper import COperator, SolverError, State, StepReport, build_c_operator, compute_mu1, compute_mu2, step

__version__ = "0.1.0"
