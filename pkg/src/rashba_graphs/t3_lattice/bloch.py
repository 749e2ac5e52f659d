"""Bloch analysis at the magneto-spin parameters ``omega = +-pi/6 (mod pi)``.

There the magnetic triangular hopping reduces, after a gauge change and a
period-2 Bloch ansatz, to a 2x2 problem whose energies are
``E = +-2 sqrt(1 + cos^2 q + cos q cos(q - theta))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import UnsupportedParameterError
from .lattice import T3Params, T3Torus, build_bipartite
from .spectrum import SpectrumResult, assemble_t3_spectrum, hermitian_spectrum

MAGIC_TOL = 1e-12


def _near_mod(x: float, target: float, period: float, tol: float = MAGIC_TOL) -> bool:
    return abs(math.remainder(x - target, period)) <= tol * max(1.0, abs(x))


def is_harper_magic(omega: float) -> bool:
    return _near_mod(omega, math.pi / 6, math.pi) or _near_mod(omega, -math.pi / 6, math.pi)


@dataclass
class HarperBands:
    lower: tuple[float, float]
    upper: tuple[float, float]
    energies: np.ndarray  # positive branch on the (q, theta) grid

    @property
    def abs_range(self) -> tuple[float, float]:
        return self.upper

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in (self.lower, self.upper))


def harper_bloch_bands(omega: float, q_grid: int = 201, theta_grid: int = 201) -> HarperBands:
    """Band hull of the magnetic triangular hopping from the 2x2 Bloch reduction."""
    if not is_harper_magic(omega):
        raise UnsupportedParameterError(
            f"omega={omega!r}: the period-2 Bloch reduction needs omega in +-pi/6 + pi*Z; "
            "use the torus eigensolve instead")
    if q_grid < 2 or theta_grid < 2:
        raise UnsupportedParameterError("grids need at least 2 points")
    q = np.linspace(0.0, 2 * math.pi, q_grid, endpoint=False)
    th = np.linspace(0.0, 2 * math.pi, theta_grid, endpoint=False)
    Q, TH = np.meshgrid(q, th, indexing="ij")
    rad = 1.0 + np.cos(Q) ** 2 + np.cos(Q) * np.cos(Q - TH)
    E = 2.0 * np.sqrt(np.maximum(rad, 0.0))
    lo, hi = float(E.min()), float(E.max())
    return HarperBands((-hi, -lo), (lo, hi), E)


@dataclass
class MagnetoSpinReport:
    spectrum: SpectrumResult
    astar_a_eigs: np.ndarray
    multiplicity_6: int
    degenerate_component: int | None  # 0 or 1 (spin index), None if neither block is 6*I
    max_outside: float  # distance of spec A*A from [0,3] u {6} u [9,12]


def _distance_to_allowed(ev: np.ndarray) -> float:
    sets = [(0.0, 3.0), (6.0, 6.0), (9.0, 12.0)]
    d = np.full(ev.shape, np.inf)
    for a, b in sets:
        d = np.minimum(d, np.maximum(0.0, np.maximum(a - ev, ev - b)))
    return float(d.max()) if ev.size else 0.0


def magneto_spin_bands(params: T3Params, torus: T3Torus, window, tol: float = 1e-8) -> MagnetoSpinReport:
    """Spectrum at ``cos k_R = 0`` and ``omega = +-pi/6 (mod pi)``.

    The torus spectrum of ``A*A`` is checked against ``[0,3] u {6} u [9,12]``;
    the energy bands are then the preimages of those intervals under ``a(E) b(E)``.
    """
    if not _near_mod(params.k_R, math.pi / 2, math.pi):
        raise UnsupportedParameterError("magneto-spin analysis needs k_R in pi/2 + pi*Z")
    if not is_harper_magic(params.omega):
        raise UnsupportedParameterError("magneto-spin analysis needs omega in +-pi/6 + pi*Z")
    ops = build_bipartite(params, torus)
    P = ops.astar_a().toarray()
    ev = hermitian_spectrum(P)
    outside = _distance_to_allowed(ev)
    if outside > tol:
        raise UnsupportedParameterError(f"spec A*A leaves [0,3] u {{6}} u [9,12] by {outside:.3e}")
    mult = int(np.sum(np.abs(ev - 6.0) <= tol))
    comp = None
    n = torus.n_hubs
    for s in (0, 1):
        block = P[s::2, s::2]
        off = P[s::2, 1 - s::2]
        if np.max(np.abs(block - 6.0 * np.eye(n))) <= tol and np.max(np.abs(off)) <= tol:
            comp = s
    n2 = torus.n_hubs
    certified = [(0.0, 3.0, n2), (6.0, 6.0, n2), (9.0, 12.0, n2)]
    spec = assemble_t3_spectrum(params, torus, window, astar_a_eigs=ev, clusters=certified)
    return MagnetoSpinReport(spec, ev, mult, comp, outside)
