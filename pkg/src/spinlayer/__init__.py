"""Finite-difference simulator of coupled magnetization/Maxwell dynamics
in a bilayered ferromagnet with spacer surface energies."""

from .errors import (AsymmetricSlabs, CFLViolation, ConfigError, EtaTooLarge,
                     NonFinite, NonTilingGrid, ParseError, SimulationError,
                     SolverDiverged, ThinLayerInactive, ValidationError,
                     WindowOutOfRange, ZeroExchange)
from .geometry import (DomainGeometry, GeometryConfig, SpacerTraces,
                       build_geometry, extract_traces, mirror, outward_normal)
from .energetics import (EnergyBreakdown, MaterialParams, anisotropy_energy,
                         exchange_energy, maxwell_energy, penalty_energy,
                         superexchange_energy, surface_anisotropy_energy,
                         thin_layer_energy, total_energy, uniform_k_matrix)
from .effective_field import (FieldAssembly, assemble_h_tot, laplacian_neumann,
                              nonlinear_bc_ghost, penalty_field, thin_layer_field)
from .maxwell import (AppliedCurrent, EMState, divergence_drift, empty_em_state,
                      fdtd_step, init_divfree, interp_h_to_cells, make_box)
from .dynamics import (SchemeConfig, SimState, Trajectory, gilbert_solve,
                       llg_rhs, run, step)
from .diagnostics import (AveragingWindow, EnergyLedger,
                          energy_inequality_residual, omega_limit_field,
                          saturation_deviation, stationarity_residual,
                          test_function_library, time_average_fields,
                          weak_residual_m)
from .config import RunConfig, build_setup, parse_config

__version__ = "0.1.0"
