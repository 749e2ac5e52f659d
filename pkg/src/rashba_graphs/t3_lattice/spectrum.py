"""Spectral analysis of the dice lattice on flux-commensurate tori.

``E`` (off the edge Dirichlet spectrum) is in the spectrum iff
``a(E) b(E)`` is a nonzero eigenvalue of ``A*A``, or ``a(E) = 0`` with
``ker A != 0``, or ``b(E) = 0`` with ``ker A* != 0``.  Edge Dirichlet
energies always belong to the spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..edge_solver import dirichlet_eigenvalues, fundamental_values
from ..errors import InvalidInputError
from ..roots import find_roots, preimage_of_interval
from ..susy_core import kernel_threshold
from .lattice import T3Params, T3Torus, build_bipartite

DENSE_LIMIT = 1500
FLAT_SPREAD = 1e-8
FLAT_TOL = 1e-10
ROOT_STEP = 0.01
DIRICHLET_MATCH = 1e-8
ZERO_EIG_TOL = 1e-8  # eigenvalues of A*A this small stand for ker A (ab = 0 is not Sigma1)


@dataclass
class SpectrumResult:
    """Classified spectrum inside a window.

    ``bands`` are Sigma1 pieces ``(lo, hi)``; zero-width pieces are isolated
    Sigma1 points coming from non-flat torus eigenvalues.  ``flat_eigenvalues``
    holds ``(E, source)`` for energies generated by a flat eigenvalue of ``A*A``.
    """

    window: tuple[float, float]
    bands: list[tuple[float, float]] = field(default_factory=list)
    points_sigma2: list[float] = field(default_factory=list)
    points_sigma3: list[float] = field(default_factory=list)
    dirichlet_points: list[float] = field(default_factory=list)
    flat_eigenvalues: list[tuple[float, str]] = field(default_factory=list)
    astar_a_clusters: list[tuple[float, float, int]] = field(default_factory=list)
    kernel_dims: tuple[int, int] = (0, 0)

    def rows(self) -> list[tuple[float, float, str, str]]:
        """``(E_lo, E_hi, label, source)`` sorted by ``E_lo``."""
        out = [(lo, hi, "Sigma1", "ab in spec A*A") for lo, hi in self.bands]
        out += [(E, E, "Sigma2", "a=0") for E in self.points_sigma2]
        out += [(E, E, "Sigma3", "eq-loc2") for E in self.points_sigma3]
        out += [(E, E, "Dirichlet", "eq-loc3") for E in self.dirichlet_points]
        out += [(E, E, "flat", src) for E, src in self.flat_eigenvalues]
        out.sort(key=lambda r: (r[0], r[1], r[2]))
        return out

    def isolated_points(self) -> list[float]:
        pts = [lo for lo, hi in self.bands if lo == hi]
        pts += self.points_sigma2 + self.points_sigma3 + self.dirichlet_points
        pts += [E for E, _ in self.flat_eigenvalues]
        return sorted(pts)

    def proper_bands(self) -> list[tuple[float, float]]:
        return [(lo, hi) for lo, hi in self.bands if hi > lo]


def _dense(M) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def hermitian_spectrum(M) -> np.ndarray:
    H = _dense(M)
    return np.linalg.eigvalsh(0.5 * (H + H.conj().T))


def operator_norm_hermitian(M) -> float:
    if M.shape[0] <= DENSE_LIMIT:
        ev = hermitian_spectrum(M)
        return float(np.max(np.abs(ev))) if ev.size else 0.0
    val = spla.eigsh(sp.csr_matrix(M), k=1, which="LM", return_eigenvectors=False, tol=1e-12)
    return float(abs(val[0]))


def flat_band_certificate(params: T3Params, torus: T3Torus, tol: float = FLAT_TOL) -> tuple[bool, float]:
    """``(||A*A - 6|| <= tol, ||A*A - 6||)``."""
    ops = build_bipartite(params, torus)
    D = ops.astar_a() - 6.0 * sp.eye(2 * torus.n_hubs)
    dev = operator_norm_hermitian(D)
    return dev <= tol, dev


def zero_mode_check(params: T3Params, torus: T3Torus) -> tuple[int, int]:
    """``(dim ker AA*, dim ker A*A)`` from the singular values of ``A``."""
    A = build_bipartite(params, torus).A.toarray()
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > kernel_threshold(A)))
    return A.shape[0] - rank, A.shape[1] - rank


def cluster_eigenvalues(ev: np.ndarray, N: int) -> list[tuple[float, float, int]]:
    """Group sorted eigenvalues whose consecutive gaps are below ``10/N^2``."""
    ev = np.sort(np.asarray(ev, dtype=float))
    if ev.size == 0:
        return []
    tol = 10.0 / (N * N)
    cuts = np.nonzero(np.diff(ev) >= tol)[0] + 1
    return [(float(g[0]), float(g[-1]), int(g.size)) for g in np.split(ev, cuts)]


def is_flat_cluster(lo: float, hi: float, count: int, N: int) -> bool:
    return hi - lo < FLAT_SPREAD and count >= N * N / 2


def localization_roots(params: T3Params, which: str, window, step: float = ROOT_STEP) -> list[float]:
    """Roots of the extreme-localization equations in the open window.

    ``eq-loc``: ``(c + lam/6 s)(s' + mu/3 s) = 1/3``; ``eq-loc2``: ``s' + mu/3 s = 0``;
    ``eq-loc3``: ``s = 0``; all at ``E + k_R^2``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise InvalidInputError("window must satisfy E_min < E_max")
    shift = params.k_R ** 2
    if which == "eq-loc3":
        return dirichlet_eigenvalues(params.pot, params.k_R, (lo, hi))

    def vals(E):
        s, s_p, c, _ = fundamental_values(params.pot, np.asarray(E, dtype=float) + shift)
        return s, s_p, c

    if which == "eq-loc":
        def f(E):
            s, s_p, c = vals(E)
            return (c + params.lam / 6 * s) * (s_p + params.mu / 3 * s) - 1.0 / 3.0
    elif which == "eq-loc2":
        def f(E):
            s, s_p, _ = vals(E)
            return s_p + params.mu / 3 * s
    else:
        raise InvalidInputError(f"unknown localization equation {which!r}")
    return [float(r) for r in find_roots(f, lo, hi, step)]


def _dedupe(points, tol: float = 1e-9) -> list[float]:
    out: list[float] = []
    for p in sorted(points):
        if not out or p - out[-1] > tol:
            out.append(float(p))
    return out


def assemble_t3_spectrum(params: T3Params, torus: T3Torus, window, step: float = ROOT_STEP,
                         astar_a_eigs: np.ndarray | None = None,
                         clusters: list[tuple[float, float, int]] | None = None) -> SpectrumResult:
    """Sigma1, Sigma2, Sigma3 and Dirichlet parts of the spectrum inside ``window`` (open).

    ``clusters`` overrides the clustered torus spectrum of ``A*A`` with known
    ``(lo, hi, count)`` pieces, e.g. bands certified by a Bloch analysis.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise InvalidInputError("window must be finite with E_min < E_max")
    ops = build_bipartite(params, torus)
    N = torus.N
    if astar_a_eigs is None:
        astar_a_eigs = hermitian_spectrum(ops.astar_a())
    dims = zero_mode_check(params, torus)
    res = SpectrumResult((lo, hi), kernel_dims=dims)
    res.astar_a_clusters = clusters if clusters is not None else cluster_eigenvalues(astar_a_eigs, N)

    dirichlet = dirichlet_eigenvalues(params.pot, params.k_R, (lo, hi))
    res.dirichlet_points = list(dirichlet)
    a_of_E, b_of_E = ops.a_of_E, ops.b_of_E

    def ab(E):
        return a_of_E(E) * b_of_E(E)

    def off_dirichlet(E):
        return all(abs(E - d) > DIRICHLET_MATCH for d in dirichlet)

    ab_tol = 1e-12
    zero_tol = ZERO_EIG_TOL
    bands: list[tuple[float, float]] = []
    flat: list[tuple[float, str]] = []
    for c_lo, c_hi, count in res.astar_a_clusters:
        if is_flat_cluster(c_lo, c_hi, count, N):
            v = 0.5 * (c_lo + c_hi)
            if abs(v) <= zero_tol:
                continue  # handled through Sigma2
            src = "eq-loc" if abs(v - 6.0) <= FLAT_SPREAD else f"ab={v:.12g}"
            for E in find_roots(lambda E, v=v: ab(E) - v, lo, hi, step):
                if off_dirichlet(E):
                    flat.append((float(E), src))
        elif c_hi - c_lo <= FLAT_SPREAD:
            v = 0.5 * (c_lo + c_hi)
            if abs(v) <= zero_tol:
                continue
            for E in find_roots(lambda E, v=v: ab(E) - v, lo, hi, step):
                if off_dirichlet(E):
                    bands.append((float(E), float(E)))
        else:
            for p, q in preimage_of_interval(ab, c_lo, c_hi, (lo, hi), step):
                p, q = max(p, lo), min(q, hi)
                if q > p or (off_dirichlet(p) and abs(ab(np.array([p]))[0]) > ab_tol):
                    bands.append((p, q))
    res.bands = _merge_bands(bands)
    res.flat_eigenvalues = sorted(flat)
    ker_hub, ker_rim = dims[1], dims[0]
    if ker_hub > 0:
        res.points_sigma2 = [E for E in _dedupe(find_roots(a_of_E, lo, hi, step)) if off_dirichlet(E)]
    if ker_rim > 0:
        res.points_sigma3 = [E for E in _dedupe(find_roots(b_of_E, lo, hi, step)) if off_dirichlet(E)]
    return res


def _merge_bands(bands):
    pieces = sorted(bands)
    merged: list[tuple[float, float]] = []
    for p, q in pieces:
        if merged and p <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(merged[-1][1], q))
        else:
            merged.append((p, q))
    return merged
