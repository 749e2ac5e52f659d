"""Vertex-space reduction of the graph Hamiltonian.

Away from the edge Dirichlet spectrum, ``E`` is an eigenvalue iff
``M(E) - T`` is singular, where ``M(E)`` acts on ``C^2``-valued vertex data
(index ``2*vertex + spin``) and ``T = diag(epsilon)``.  Eigenfunctions are
rebuilt edge by edge from a kernel vector.

For identical even edges and ``epsilon(v) = deg(v) * eps`` the condition
collapses to ``t_eps(E) in spec(Delta)`` with ``Delta`` the degree-normalised
transport hopping operator; :func:`discrete_reduction_spectrum` computes that
preimage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .edge_solver import (
    EdgePotential,
    dirichlet_eigenvalues,
    fundamental_profile,
    fundamental_values,
    t_epsilon,
)
from .errors import InvalidInputError, NearSingularError
from .graph_core import GraphModel, sigma_matrix
from .roots import find_roots, golden_section_min, memoize_array, preimage_of_interval

KERNEL_TOL = 1e-8
DIRICHLET_RADIUS = 1e-4
SINGULAR_S = 1e-9


@dataclass(frozen=True)
class MFunctionMatrix:
    E: float
    matrix: np.ndarray
    k_R: float


@dataclass(frozen=True)
class CouplingMatrix:
    """``T = diag(epsilon(v))`` repeated over the two spin components."""

    epsilon: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.repeat(np.asarray(self.epsilon, dtype=float), 2)).astype(complex)


def coupling_matrix(g: GraphModel) -> CouplingMatrix:
    return CouplingMatrix(np.array([v.epsilon for v in g.vertices], dtype=float))


@dataclass
class SpectralCheck:
    in_spectrum: bool
    gap: float
    kernel_basis: list[np.ndarray]


@dataclass
class ScanResult:
    """Output of :func:`scan_spectrum`.

    ``samples`` holds the gap on the scan grid (Dirichlet neighbourhoods
    removed).  ``dirichlet_coincident`` lists edge Dirichlet energies in the
    window; whether they belong to the spectrum is not decided here.
    """

    samples: np.ndarray
    eigenvalues: list[float]
    gaps: list[float]
    dirichlet_coincident: list[float]

    def rows(self):
        """``(E, gap, in_spectrum)`` rows, grid and refined roots merged by E."""
        rows = [(float(E), float(g), False) for E, g in self.samples]
        rows += [(E, g, True) for E, g in zip(self.eigenvalues, self.gaps)]
        rows.sort(key=lambda r: r[0])
        return rows


@dataclass
class EigenfunctionOnGraph:
    E: float
    vertex_values: np.ndarray  # (n_vertices, 2)
    t: list[np.ndarray]  # per edge
    values: list[np.ndarray]  # per edge, shape (samples, 2)
    residual: float = field(default=0.0)


@dataclass
class SpectralSet:
    """Finite union of points and closed intervals."""

    points: list[float] = field(default_factory=list)
    intervals: list[tuple[float, float]] = field(default_factory=list)
    dirichlet_excluded: list[float] = field(default_factory=list)

    @classmethod
    def from_items(cls, items: Iterable) -> SpectralSet:
        pts, ivs = [], []
        for it in items:
            if np.ndim(it) == 0:
                pts.append(float(it))
            else:
                lo, hi = float(it[0]), float(it[1])
                if lo > hi:
                    raise InvalidInputError(f"interval ({lo}, {hi}) is reversed")
                (pts.append(lo) if lo == hi else ivs.append((lo, hi)))
        return cls(sorted(pts), sorted(ivs))

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(abs(x - p) <= tol for p in self.points) or any(
            lo - tol <= x <= hi + tol for lo, hi in self.intervals)


# --------------------------------------------------------------------------


def _edge_values(g: GraphModel, z: np.ndarray) -> list[tuple[np.ndarray, ...]]:
    """Per-edge (s, s', c, c') arrays over z, sharing work between identical potentials."""
    cache: dict[int, tuple] = {}
    out = []
    for e in g.edges:
        key = id(e.potential)
        if key not in cache:
            cache[key] = fundamental_values(e.potential, z)
        out.append(cache[key])
    return out


def _assemble(g: GraphModel, vals: Sequence[tuple[float, float, float, float]], taus) -> np.ndarray:
    n = g.n_vertices
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, e in enumerate(g.edges):
        s, sp, c, _ = vals[k]
        a, b = 2 * g.index[e.tail], 2 * g.index[e.head]
        tau = taus[k]
        M[a:a + 2, b:b + 2] += tau.conj().T / s
        M[b:b + 2, a:a + 2] += tau / s
        M[a:a + 2, a:a + 2] -= (c / s) * np.eye(2)
        M[b:b + 2, b:b + 2] -= (sp / s) * np.eye(2)
    return M


def _batched_gaps(g: GraphModel, per_edge, taus, Tm: np.ndarray) -> np.ndarray:
    """Smallest singular value of ``M(E) - T`` for every grid point at once."""
    n_grid = per_edge[0][0].size if per_edge else 0
    dim = 2 * g.n_vertices
    M = np.zeros((n_grid, dim, dim), dtype=complex)
    bad = np.zeros(n_grid, dtype=bool)
    eye = np.eye(2)
    for k, e in enumerate(g.edges):
        s, sp, c, _ = per_edge[k]
        bad |= np.abs(s) <= SINGULAR_S
        inv = 1.0 / np.where(np.abs(s) <= SINGULAR_S, 1.0, s)
        a, b = 2 * g.index[e.tail], 2 * g.index[e.head]
        tau = taus[k]
        M[:, a:a + 2, b:b + 2] += inv[:, None, None] * tau.conj().T
        M[:, b:b + 2, a:a + 2] += inv[:, None, None] * tau
        M[:, a:a + 2, a:a + 2] -= (c * inv)[:, None, None] * eye
        M[:, b:b + 2, b:b + 2] -= (sp * inv)[:, None, None] * eye
    M -= Tm[None]
    gaps = np.linalg.svd(M, compute_uv=False)[:, -1] if n_grid else np.zeros(0)
    gaps[bad] = np.inf
    return gaps


def _transports(g: GraphModel) -> list[np.ndarray]:
    return [g.transport(k).matrix for k in range(len(g.edges))]


def build_m_function(g: GraphModel, E: float) -> MFunctionMatrix:
    """``M(E)`` per the vertex Weyl-function formula.

    Raises :class:`NearSingularError` when ``|s(l; E + k_R^2)| <= 1e-9`` on any edge.
    """
    z = np.array([float(E) + g.k_R ** 2])
    per_edge = _edge_values(g, z)
    vals = []
    for k, (s, sp, c, cp) in enumerate(per_edge):
        if abs(s[0]) <= SINGULAR_S:
            raise NearSingularError(f"E={E} is at a Dirichlet eigenvalue of edge {k}", edge=k, value=float(E))
        vals.append((s[0], sp[0], c[0], cp[0]))
    return MFunctionMatrix(float(E), _assemble(g, vals, _transports(g)), g.k_R)


def spectral_condition(g: GraphModel, T: CouplingMatrix, E: float, tol: float = KERNEL_TOL) -> SpectralCheck:
    """Whether ``0 in spec(M(E) - T)``; ``gap`` is the smallest singular value."""
    M = build_m_function(g, E).matrix - T.matrix
    _, sv, vh = np.linalg.svd(M)
    gap = float(sv[-1])
    basis = [vh[i].conj() for i in range(len(sv)) if sv[i] <= tol]
    return SpectralCheck(gap <= tol, gap, basis)


def _graph_dirichlet_points(g: GraphModel, window) -> list[float]:
    pts: list[float] = []
    seen = set()
    for e in g.edges:
        if id(e.potential) in seen:
            continue
        seen.add(id(e.potential))
        pts.extend(dirichlet_eigenvalues(e.potential, g.k_R, window))
    pts.sort()
    merged: list[float] = []
    for p in pts:
        if not merged or p - merged[-1] > 1e-9:
            merged.append(p)
    return merged


def scan_spectrum(g: GraphModel, T: CouplingMatrix, window, grid_step: float = 0.01,
                  tol: float = KERNEL_TOL, dirichlet_radius: float = DIRICHLET_RADIUS) -> ScanResult:
    """Scan the smallest singular value of ``M(E) - T`` and refine its zeros.

    Grid points within ``dirichlet_radius`` of an edge Dirichlet energy are
    skipped.  Every local minimum of the sampled gap is refined by
    golden-section search to ``1e-10`` in E and kept if the gap there is
    ``<= tol``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise InvalidInputError("window must satisfy E_min < E_max")
    if grid_step <= 0:
        raise InvalidInputError("grid step must be positive")
    dpts = _graph_dirichlet_points(g, (lo - dirichlet_radius, hi + dirichlet_radius))
    n = max(int(math.ceil((hi - lo) / grid_step)), 2)
    grid = np.linspace(lo, hi, n + 1)
    keep = np.ones(grid.size, dtype=bool)
    for d in dpts:
        keep &= np.abs(grid - d) > dirichlet_radius
    grid = grid[keep]
    taus = _transports(g)
    Tm = T.matrix
    z = grid + g.k_R ** 2
    per_edge = _edge_values(g, z)

    def gap_from_vals(vals):
        if any(abs(v[0]) <= SINGULAR_S for v in vals):
            return math.inf
        return float(np.linalg.svd(_assemble(g, vals, taus) - Tm, compute_uv=False)[-1])

    gaps = _batched_gaps(g, per_edge, taus, Tm)

    def gap_at(E):
        if any(abs(E - d) <= dirichlet_radius for d in dpts):
            return math.inf
        zz = np.array([E + g.k_R ** 2])
        vals = [tuple(a[0] for a in pe) for pe in _edge_values(g, zz)]
        return gap_from_vals(vals)

    # contiguous runs between excluded neighbourhoods
    breaks = np.nonzero(np.diff(grid) > 1.5 * (hi - lo) / n)[0] + 1
    runs = np.split(np.arange(grid.size), breaks)
    found: list[tuple[float, float]] = []
    for run in runs:
        if run.size == 0:
            continue
        gr = gaps[run]
        for j in range(run.size):
            left = gr[j - 1] if j > 0 else math.inf
            right = gr[j + 1] if j + 1 < run.size else math.inf
            if not (gr[j] <= left and gr[j] <= right) or not math.isfinite(gr[j]):
                continue
            a = grid[run[j - 1]] if j > 0 else grid[run[j]]
            b = grid[run[j + 1]] if j + 1 < run.size else grid[run[j]]
            if a == b:
                x, gx = float(grid[run[j]]), float(gr[j])
            else:
                x, gx = golden_section_min(gap_at, float(a), float(b), xtol=1e-10)
            if gx <= tol and lo < x < hi:
                found.append((x, gx))
    found.sort()
    eig, gp = [], []
    for x, gx in found:
        if eig and abs(x - eig[-1]) <= 1e-7:
            if gx < gp[-1]:
                eig[-1], gp[-1] = x, gx
            continue
        eig.append(x)
        gp.append(gx)
    samples = np.column_stack([grid, gaps])
    return ScanResult(samples, eig, gp, [d for d in dpts if lo < d < hi])


def reconstruct_eigenfunction(g: GraphModel, E: float, xi, samples_per_edge: int = 201,
                              tol: float = 1e-6) -> EigenfunctionOnGraph:
    """Edge functions of the solution with vertex data ``xi`` (length ``2*|V|``)."""
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    n = g.n_vertices
    if xi.size != 2 * n:
        raise InvalidInputError(f"kernel vector must have length {2 * n}")
    M = build_m_function(g, E).matrix - coupling_matrix(g).matrix
    scale = max(1.0, float(np.linalg.norm(M, 2))) * max(float(np.linalg.norm(xi)), 1e-300)
    if np.linalg.norm(M @ xi) > tol * scale:
        raise InvalidInputError("vector is not in the kernel of M(E) - T")
    z = float(E) + g.k_R ** 2
    F = xi.reshape(n, 2)
    ts, vs = [], []
    residual = 0.0
    profiles: dict[int, tuple] = {}
    for k, e in enumerate(g.edges):
        key = id(e.potential)
        if key not in profiles:
            profiles[key] = fundamental_profile(e.potential, z, samples_per_edge)
        t, s_t, _, c_t, _ = profiles[key]
        s_l, c_l = s_t[-1], c_t[-1]
        fa = F[g.index[e.tail]]
        fb = F[g.index[e.head]]
        tau = g.transport(k).matrix
        coeff = (tau.conj().T @ fb - c_l * fa) / s_l
        gvals = np.outer(s_t, coeff) + np.outer(c_t, fa)
        a = g.magnetic_potential(k)
        sig = sigma_matrix(e.direction)
        ct = np.cos(g.k_R * t)[:, None, None]
        st = np.sin(g.k_R * t)[:, None, None]
        theta = np.exp(1j * a * t)[:, None, None] * (ct * np.eye(2) + 1j * st * sig)
        fvals = np.einsum("kij,kj->ki", theta, gvals)
        h = t[1] - t[0]
        if t.size >= 3:
            d2 = (gvals[2:] - 2 * gvals[1:-1] + gvals[:-2]) / h ** 2
            u = e.potential(t[1:-1])[:, None]
            r = -d2 + (u - z) * gvals[1:-1]
            residual = max(residual, float(np.max(np.abs(r))))
        ts.append(t)
        vs.append(fvals)
    return EigenfunctionOnGraph(float(E), F.copy(), ts, vs, residual)


# --------------------------------------------------------------------------
# identical even edges


def hopping_operator(g: GraphModel) -> np.ndarray:
    """Unweighted hopping ``sum tau* xi(head)`` over out-edges plus ``sum tau xi(tail)`` over in-edges."""
    n = g.n_vertices
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    for k, e in enumerate(g.edges):
        a, b = 2 * g.index[e.tail], 2 * g.index[e.head]
        tau = g.transport(k).matrix
        H[a:a + 2, b:b + 2] += tau.conj().T
        H[b:b + 2, a:a + 2] += tau
    return H


def weighted_discrete_spectrum(g: GraphModel) -> np.ndarray:
    """Eigenvalues of ``deg^{-1} * hopping`` on ``l^2(V, C^2; deg)``."""
    d = np.repeat(g.degrees().astype(float), 2) ** -0.5
    H = d[:, None] * hopping_operator(g) * d[None, :]
    return np.linalg.eigvalsh(0.5 * (H + H.conj().T))


def discrete_reduction_spectrum(pot: EdgePotential, eps: float, k_R: float, delta_spec, window,
                                step: float = 0.01, even_tol: float = 1e-8,
                                dirichlet_radius: float = DIRICHLET_RADIUS) -> SpectralSet:
    """Preimage of ``delta_spec`` under ``E -> c(l; E+k_R^2) + eps*s(l; E+k_R^2)``.

    ``delta_spec`` is an iterable of points and ``(lo, hi)`` intervals.
    Points within ``dirichlet_radius`` of an edge Dirichlet energy are moved
    to ``dirichlet_excluded``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise InvalidInputError("window must satisfy E_min < E_max")
    target = delta_spec if isinstance(delta_spec, SpectralSet) else SpectralSet.from_items(delta_spec)
    shift = k_R * k_R
    values = memoize_array(lambda E: np.stack(fundamental_values(pot, E + shift)))

    def t_of(E):
        v = values(E)
        return v[2] + eps * v[0]

    grid = np.linspace(lo, hi, max(int(math.ceil((hi - lo) / step)), 2) + 1)
    s, sp, c, _ = values(grid)
    if np.max(np.abs(c - sp) / np.maximum(1.0, np.abs(c))) > even_tol:
        raise InvalidInputError("potential is not even: c(l) != s'(l) on the window")

    dpts = dirichlet_eigenvalues(pot, k_R, (lo - dirichlet_radius, hi + dirichlet_radius))
    out = SpectralSet()
    pts: list[float] = []
    for v in target.points:
        pts.extend(float(r) for r in find_roots(lambda E, v=v: t_of(E) - v, lo, hi, step))
    for a, b in target.intervals:
        for p, q in preimage_of_interval(t_of, a, b, (lo, hi), step):
            if p == q:
                pts.append(p)
            else:
                out.intervals.append((p, q))
    for p in sorted(pts):
        if any(abs(p - d) <= dirichlet_radius for d in dpts):
            out.dirichlet_excluded.append(p)
        elif not out.points or p - out.points[-1] > 1e-9:
            out.points.append(p)
    out.intervals = _merge_intervals(out.intervals)
    out.points = [p for p in out.points if not any(a <= p <= b for a, b in out.intervals)]
    return out


def _merge_intervals(ivs):
    ivs = sorted(ivs)
    merged: list[tuple[float, float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged
