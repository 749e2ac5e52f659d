"""Dice (T3) lattice with magnetic flux and Rashba coupling."""
from .bloch import HarperBands, MagnetoSpinReport, harper_bloch_bands, is_harper_magic, magneto_spin_bands
from .lattice import (
    BipartiteOperators,
    T3Params,
    T3Torus,
    ab_functions,
    assemble_aastar_closed_form,
    build_bipartite,
    field_strength,
    hub_phase,
    is_commensurate,
    smallest_commensurate_N,
    spin_harper,
    t3_tau,
    triangular_harper,
)
from .spectrum import (
    SpectrumResult,
    assemble_t3_spectrum,
    cluster_eigenvalues,
    flat_band_certificate,
    localization_roots,
    zero_mode_check,
)
from .sweep import ButterflyData, FlatbandMap, butterfly_sweep, classify_eigenvalues, flatband_map

__all__ = [
    "BipartiteOperators", "ButterflyData", "FlatbandMap", "HarperBands", "MagnetoSpinReport",
    "SpectrumResult", "T3Params", "T3Torus", "ab_functions", "assemble_aastar_closed_form",
    "assemble_t3_spectrum", "build_bipartite", "butterfly_sweep", "classify_eigenvalues",
    "cluster_eigenvalues", "field_strength", "flat_band_certificate", "flatband_map",
    "harper_bloch_bands", "hub_phase", "is_commensurate", "is_harper_magic", "localization_roots",
    "magneto_spin_bands", "smallest_commensurate_N", "spin_harper", "t3_tau", "triangular_harper",
    "zero_mode_check",
]
