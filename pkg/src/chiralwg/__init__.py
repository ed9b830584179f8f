"""
Chiral light-matter interaction in nanophotonic waveguides.

Scattering of guided photons by directionally coupled emitters, confined
fields with transverse spin, Lindblad generators for emitter chains, their
solvers and protocol-level simulations.
"""

from .devices import device_report
from .dynamics import (
    DimerReport,
    SteadyState,
    Trajectory,
    dimer_analysis,
    dimer_state,
    evolve,
    liouvillian_spectrum,
    photon_flux,
    propagate_operator,
    steady_state,
    zero_eigenvalue_count,
)
from .errors import CapacityError, GridError, IntegrationError, ScenarioError
from .fields import (
    FieldMap,
    RateSet,
    beta_factors,
    directional_rates,
    divergence,
    electric_spin_density,
    evanescent_parameters,
    load_field_map,
    longitudinal_component,
    photon_spin,
    save_field_map,
    tir_evanescent_field,
)
from .master_equation import (
    ChiralChannel,
    EmitterSpec,
    Generator,
    Jump,
    add_drive,
    build_bidirectional,
    build_cascaded,
    build_chiral,
    cascaded_factory,
    reduced_generator_check,
)
from .protocols import (
    PulseFamily,
    ScanResult,
    TransferResult,
    dimer_scan,
    match_dimer_drive,
    optimize_pulse,
    state_transfer,
)
from .scattering import (
    ChainSpec,
    ScatterSet,
    chain_transmission,
    circulator_smatrix,
    isolation_metrics,
    scatter_on_resonance,
    scatter_spectrum,
    transfer_matrix,
)
from .scenario import Scenario, parse_scenario, run_scenario
from .trajectories import MCResult, mc_trajectories

__all__ = [
    "device_report",
    "DimerReport",
    "SteadyState",
    "Trajectory",
    "dimer_analysis",
    "dimer_state",
    "evolve",
    "liouvillian_spectrum",
    "photon_flux",
    "propagate_operator",
    "steady_state",
    "zero_eigenvalue_count",
    "CapacityError",
    "GridError",
    "IntegrationError",
    "ScenarioError",
    "FieldMap",
    "RateSet",
    "beta_factors",
    "directional_rates",
    "divergence",
    "electric_spin_density",
    "evanescent_parameters",
    "load_field_map",
    "longitudinal_component",
    "photon_spin",
    "save_field_map",
    "tir_evanescent_field",
    "ChiralChannel",
    "EmitterSpec",
    "Generator",
    "Jump",
    "add_drive",
    "build_bidirectional",
    "build_cascaded",
    "build_chiral",
    "cascaded_factory",
    "reduced_generator_check",
    "PulseFamily",
    "ScanResult",
    "TransferResult",
    "dimer_scan",
    "match_dimer_drive",
    "optimize_pulse",
    "state_transfer",
    "ChainSpec",
    "ScatterSet",
    "chain_transmission",
    "circulator_smatrix",
    "isolation_metrics",
    "scatter_on_resonance",
    "scatter_spectrum",
    "transfer_matrix",
    "Scenario",
    "parse_scenario",
    "run_scenario",
    "MCResult",
    "mc_trajectories",
]

__version__ = "0.1.0"
