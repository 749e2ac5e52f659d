"""Dice-lattice geometry, transport matrices and the bipartite hopping operator.

Sites are ``alpha_{m,n}`` (hubs, six neighbours) and ``beta_{m,n}``,
``gamma_{m,n}`` (rims, three neighbours), all edges of unit length leaving
the hubs in the directions ``e_j = (cos(pi j/3), sin(pi j/3))``.

On an ``N x N`` torus the vertex data is ordered as:

* hubs ``V0``: index ``m*N + n``;
* rims ``V1``: all ``beta`` (``m*N + n``) then all ``gamma`` (``N^2 + m*N + n``);
* spin is the fastest index, so site ``k`` occupies rows ``2k, 2k+1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..edge_solver import EdgePotential, fundamental_values
from ..errors import CommensurabilityError, InvalidInputError
from ..graph_core import Transport, sigma_matrix, transport_matrix

COMMENSURATE_TOL = 1e-12
SQRT3 = math.sqrt(3.0)

# spin parts of the A*A expansion, one per hopping direction
R1 = np.array([[0, 1.5 - 0.5j * SQRT3], [-1.5 - 0.5j * SQRT3, 0]])
R2 = np.array([[0, 1.5 + 0.5j * SQRT3], [-1.5 + 0.5j * SQRT3, 0]])
R3 = np.array([[0, -1j * SQRT3], [-1j * SQRT3, 0]])


def hub_position(m: int, n: int) -> np.ndarray:
    return np.array([1.5 * (m + n), 0.5 * SQRT3 * (n - m)])


def beta_position(m: int, n: int) -> np.ndarray:
    return np.array([0.5 * (3 * (m + n) + 2), 0.5 * SQRT3 * (n - m)])


def gamma_position(m: int, n: int) -> np.ndarray:
    return np.array([0.5 * (3 * (m + n) + 1), 0.5 * SQRT3 * (n - m + 1)])


def edge_direction(j: int) -> tuple[float, float]:
    return (math.cos(math.pi * j / 3), math.sin(math.pi * j / 3))


def field_strength(omega: float) -> float:
    """``B_z`` giving flux ``omega`` through an elementary rhombus."""
    return 4.0 * omega / SQRT3


@dataclass(frozen=True)
class T3Params:
    omega: float = 0.0
    k_R: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    pot: EdgePotential = field(default_factory=lambda: EdgePotential.zero(1.0))

    def __post_init__(self):
        for name in ("omega", "k_R", "lam", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if abs(self.pot.length - 1.0) > 1e-12:
            raise InvalidInputError("dice-lattice edges have unit length")

    def replace(self, **kw) -> T3Params:
        vals = dict(omega=self.omega, k_R=self.k_R, lam=self.lam, mu=self.mu, pot=self.pot)
        vals.update(kw)
        return T3Params(**vals)


def _is_multiple_of_2pi(x: float, tol: float = COMMENSURATE_TOL) -> bool:
    r = math.remainder(x, 2 * math.pi)
    return abs(r) <= tol * max(1.0, abs(x))


def is_commensurate(omega: float, N: int) -> bool:
    return _is_multiple_of_2pi(omega * N) and _is_multiple_of_2pi(3 * omega * N)


def smallest_commensurate_N(omega: float, n_max: int = 48) -> int | None:
    for N in range(1, n_max + 1):
        if is_commensurate(omega, N):
            return N
    return None


@dataclass(frozen=True)
class T3Torus:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidInputError("torus period must be a positive integer")

    @property
    def n_hubs(self) -> int:
        return self.N * self.N

    @property
    def n_rims(self) -> int:
        return 2 * self.N * self.N

    def check(self, omega: float) -> None:
        if not is_commensurate(omega, self.N):
            raise CommensurabilityError(
                f"omega={omega!r} is not commensurate with N={self.N}: need omega*N and 3*omega*N in 2*pi*Z")


def hub_phase(m, n, j: int, omega: float):
    """Magnetic potential ``a_{m,n,j}`` on the edge ``j`` leaving ``alpha_{m,n}``."""
    return omega * {1: 2 * m + n, 2: m + 2 * n, 3: n - m,
                    4: -(2 * m + n), 5: -(m + 2 * n), 6: m - n}[j]


def t3_tau(m: int, n: int, j: int, params: T3Params) -> Transport:
    if j not in range(1, 7):
        raise InvalidInputError(f"edge label j must be in 1..6, got {j}")
    sig = sigma_matrix(edge_direction(j))
    return transport_matrix(hub_phase(m, n, j, params.omega), params.k_R, 1.0, sig)


def _tau_stack(m: np.ndarray, n: np.ndarray, j: int, params: T3Params) -> np.ndarray:
    """Vectorised ``tau_{m,n,j}`` for integer arrays, shape (len, 2, 2)."""
    sig = sigma_matrix(edge_direction(j))
    spin = math.cos(params.k_R) * np.eye(2) + 1j * math.sin(params.k_R) * sig
    ph = np.exp(1j * hub_phase(m, n, j, params.omega))
    return ph[:, None, None] * spin[None, :, :]


@dataclass
class BipartiteOperators:
    A: sp.csr_matrix  # (2 * n_rims) x (2 * n_hubs)
    a_of_E: Callable
    b_of_E: Callable
    N: int

    @property
    def A_star(self) -> sp.csr_matrix:
        return self.A.conj().T.tocsr()

    def astar_a(self) -> sp.csr_matrix:
        return (self.A_star @ self.A).tocsr()

    def a_astar(self) -> sp.csr_matrix:
        return (self.A @ self.A_star).tocsr()


def _block_coo(rows: np.ndarray, cols: np.ndarray, blocks: np.ndarray, shape) -> sp.csr_matrix:
    """Sparse matrix from 2x2 blocks placed at site pairs (rows, cols)."""
    r = (2 * rows[:, None, None] + np.arange(2)[None, :, None]).repeat(2, axis=2)
    c = (2 * cols[:, None, None] + np.arange(2)[None, None, :]).repeat(2, axis=1)
    return sp.coo_matrix((blocks.ravel(), (r.ravel(), c.ravel())), shape=shape).tocsr()


def ab_functions(params: T3Params):
    """``a(E) = 6c + lam*s`` and ``b(E) = 3s' + mu*s`` at ``E + k_R^2``, edge length 1."""
    shift = params.k_R ** 2

    def a_of_E(E):
        s, _, c, _ = fundamental_values(params.pot, np.asarray(E, dtype=float) + shift)
        return 6.0 * c + params.lam * s

    def b_of_E(E):
        s, s_p, _, _ = fundamental_values(params.pot, np.asarray(E, dtype=float) + shift)
        return 3.0 * s_p + params.mu * s

    return a_of_E, b_of_E


def build_bipartite(params: T3Params, torus: T3Torus) -> BipartiteOperators:
    """The hub-to-rim operator ``A`` on the torus."""
    torus.check(params.omega)
    N = torus.N
    mm, nn = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    mm, nn = mm.ravel(), nn.ravel()

    def hub(m, n):
        return (m % N) * N + (n % N)

    beta = hub(mm, nn)
    gamma = N * N + hub(mm, nn)
    terms = [
        (beta, hub(mm + 1, nn), _tau_stack(mm + 1, nn, 2, params)),
        (beta, hub(mm, nn + 1), _tau_stack(mm, nn + 1, 4, params)),
        (beta, hub(mm, nn), _tau_stack(mm, nn, 6, params)),
        (gamma, hub(mm, nn), _tau_stack(mm, nn, 1, params)),
        (gamma, hub(mm, nn + 1), _tau_stack(mm, nn + 1, 3, params)),
        (gamma, hub(mm - 1, nn + 1), _tau_stack(mm - 1, nn + 1, 5, params)),
    ]
    rows = np.concatenate([t[0] for t in terms])
    cols = np.concatenate([t[1] for t in terms])
    blocks = np.concatenate([t[2] for t in terms])
    A = _block_coo(rows, cols, blocks, (2 * torus.n_rims, 2 * torus.n_hubs))
    a_of_E, b_of_E = ab_functions(params)
    return BipartiteOperators(A, a_of_E, b_of_E, N)


def _hops(omega: float, N: int):
    """(target offsets, phase arrays, spin matrix) for the six hub-to-hub hops."""
    mm, nn = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    mm, nn = mm.ravel(), nn.ravel()
    w3 = 3.0 * omega
    return mm, nn, [
        ((0, 1), -w3 * mm, R1),
        ((0, -1), w3 * mm, R1.conj().T),
        ((1, 0), w3 * nn, R2),
        ((-1, 0), -w3 * nn, R2.conj().T),
        ((-1, 1), -w3 * (mm + nn), R3),
        ((1, -1), w3 * (mm + nn), R3.conj().T),
    ]


def triangular_harper(omega: float, torus: T3Torus) -> sp.csr_matrix:
    """Spinless magnetic hopping ``Delta`` on the hub torus (N^2 x N^2)."""
    torus.check(omega)
    N = torus.N
    mm, nn, hops = _hops(omega, N)
    rows, cols, vals = [], [], []
    src = mm * N + nn
    for (dm, dn), ph, _ in hops:
        rows.append(src)
        cols.append(((mm + dm) % N) * N + (nn + dn) % N)
        vals.append(np.exp(1j * ph))
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(N * N, N * N)).tocsr()


def spin_harper(omega: float, torus: T3Torus) -> sp.csr_matrix:
    """``Delta~``: the hops of ``Delta`` dressed with the spin matrices R1, R2, R3."""
    torus.check(omega)
    N = torus.N
    mm, nn, hops = _hops(omega, N)
    src = mm * N + nn
    rows, cols, blocks = [], [], []
    for (dm, dn), ph, R in hops:
        rows.append(src)
        cols.append(((mm + dm) % N) * N + (nn + dn) % N)
        blocks.append(np.exp(1j * ph)[:, None, None] * R[None])
    return _block_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(blocks),
                      (2 * N * N, 2 * N * N))


def assemble_aastar_closed_form(params: T3Params, torus: T3Torus) -> sp.csr_matrix:
    """Right-hand side of the hub-space expansion of ``A*A``.

    ``6 + cos(w) sin(2k) Delta~ + 2 [cos(w) cos^2(k) - sin^2(k) diag(cos(w - pi/3), cos(w + pi/3))] (Delta (+) Delta)``
    """
    w, k = params.omega, params.k_R
    D = triangular_harper(w, torus)
    Dt = spin_harper(w, torus)
    n = torus.n_hubs
    coef = np.diag([math.cos(w) * math.cos(k) ** 2 - math.sin(k) ** 2 * math.cos(w - math.pi / 3),
                    math.cos(w) * math.cos(k) ** 2 - math.sin(k) ** 2 * math.cos(w + math.pi / 3)])
    DD = sp.kron(D, sp.eye(2))
    C = sp.kron(sp.eye(n), sp.csr_matrix(coef))
    out = 6.0 * sp.eye(2 * n) + math.cos(w) * math.sin(2 * k) * Dt + 2.0 * (C @ DD)
    return out.tocsr()
