"""Parameter sweeps over flux and Rashba coupling."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import CommensurabilityError
from .lattice import T3Params, T3Torus, build_bipartite, smallest_commensurate_N
from .spectrum import (
    SpectrumResult,
    assemble_t3_spectrum,
    cluster_eigenvalues,
    flat_band_certificate,
    hermitian_spectrum,
    is_flat_cluster,
)

log = logging.getLogger(__name__)


@dataclass
class ButterflyData:
    rows: list[tuple[float, int, int, float, str]] = field(default_factory=list)
    spectra: dict[float, SpectrumResult] = field(default_factory=dict)
    errors: list[tuple[float, int, str]] = field(default_factory=list)

    header = ("omega", "N", "eigenvalue_index", "value", "kind")


def classify_eigenvalues(ev: np.ndarray, N: int, zero_tol: float = 1e-9) -> list[str]:
    """``band``, ``flat`` or ``kernel`` for each sorted eigenvalue of ``A*A``."""
    ev = np.sort(ev)
    kinds = ["band"] * ev.size
    i = 0
    for lo, hi, count in cluster_eigenvalues(ev, N):
        flat = is_flat_cluster(lo, hi, count, N)
        for j in range(i, i + count):
            if abs(ev[j]) <= zero_tol:
                kinds[j] = "kernel"
            elif flat:
                kinds[j] = "flat"
        i += count
    return kinds


def butterfly_sweep(params: T3Params, omegas_with_N, window=None) -> ButterflyData:
    """Spectrum of ``A*A`` (and optionally the energy spectrum) for each ``(omega, N)``.

    Incommensurate pairs are recorded in ``errors`` and skipped.
    """
    data = ButterflyData()
    for omega, N in omegas_with_N:
        p = params.replace(omega=float(omega))
        torus = T3Torus(int(N))
        try:
            ops = build_bipartite(p, torus)
        except CommensurabilityError as exc:
            log.warning("skipping omega=%r: %s", omega, exc)
            data.errors.append((float(omega), int(N), str(exc)))
            continue
        ev = np.sort(hermitian_spectrum(ops.astar_a()))
        for i, (v, kind) in enumerate(zip(ev, classify_eigenvalues(ev, torus.N))):
            data.rows.append((float(omega), torus.N, i, float(v), kind))
        if window is not None:
            data.spectra[float(omega)] = assemble_t3_spectrum(p, torus, window, astar_a_eigs=ev)
    return data


@dataclass
class FlatbandMap:
    rows: list[tuple[float, float, int, float, bool]] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)

    header = ("omega", "k_R", "N", "deviation", "is_flat")


def flatband_map(omega_grid: int, kr_grid: int, N: int | None = None, n_max: int = 48,
                 params: T3Params | None = None) -> FlatbandMap:
    """``||A*A - 6||`` on ``omega = 2 pi p / omega_grid`` and ``k_R = 2 pi q / kr_grid``.

    With ``N=None`` each flux uses the smallest commensurate torus up to ``n_max``.
    """
    params = params or T3Params()
    out = FlatbandMap()
    for p in range(omega_grid):
        omega = 2 * math.pi * p / omega_grid
        n = N if N is not None else smallest_commensurate_N(omega, n_max)
        if n is None:
            log.info("no commensurate torus with N <= %d for omega=%r; skipped", n_max, omega)
            out.skipped.append(omega)
            continue
        try:
            T3Torus(n).check(omega)
        except CommensurabilityError as exc:
            log.info("skipping omega=%r: %s", omega, exc)
            out.skipped.append(omega)
            continue
        for q in range(kr_grid):
            k_R = 2 * math.pi * q / kr_grid
            flat, dev = flat_band_certificate(params.replace(omega=omega, k_R=k_R), T3Torus(n))
            out.rows.append((omega, k_R, n, dev, flat))
    return out
