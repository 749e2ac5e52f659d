"""Spectral analysis of quantum graphs with magnetic field and Rashba spin-orbit coupling."""
from .edge_solver import (
    EdgePotential,
    EdgeSolution,
    dirichlet_eigenvalues,
    fundamental_profile,
    fundamental_values,
    load_potential,
    solve_fundamental,
    t_epsilon,
)
from .errors import CommensurabilityError, InvalidInputError, NearSingularError, UnsupportedParameterError
from .graph_core import (
    Edge,
    GraphModel,
    MagneticField,
    Transport,
    Vertex,
    build_graph,
    edge_magnetic_potential,
    interval_graph,
    parse_graph_file,
    sigma_matrix,
    square_cycle,
    star_graph,
    transport_matrix,
)
from .susy_core import SusyBlock, susy_membership_pm_m, susy_spectrum
from .vertex_analysis import (
    CouplingMatrix,
    EigenfunctionOnGraph,
    MFunctionMatrix,
    ScanResult,
    SpectralSet,
    build_m_function,
    coupling_matrix,
    discrete_reduction_spectrum,
    reconstruct_eigenfunction,
    scan_spectrum,
    spectral_condition,
    weighted_discrete_spectrum,
)

__version__ = "0.1.0"
