"""Spectra of block operators ``L = [[m, A*], [A, -m]]``.

With the singular value decomposition of ``A`` the operator splits into
2x2 blocks ``[[m, s], [s, -m]]`` (eigenvalues ``+-sqrt(s^2 + m^2)``) plus the
kernels: ``ker A`` sits in the ``+m`` eigenspace, ``ker A*`` in the ``-m`` one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def kernel_threshold(A: np.ndarray) -> float:
    """Singular values at or below this count as zero."""
    norm = float(np.linalg.norm(A, 2)) if A.size else 0.0
    return 1e-10 * max(1.0, norm)


@dataclass(frozen=True)
class SusyBlock:
    A: np.ndarray  # p x q, maps C^q -> C^p
    m: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        if A.ndim != 2:
            raise InvalidInputError("A must be a matrix")
        if not np.all(np.isfinite(A)) or not np.isfinite(self.m):
            raise InvalidInputError("SUSY block entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "m", float(self.m))

    @classmethod
    def from_pairs(cls, rows, m: float = 0.0) -> SusyBlock:
        """Build from a row-major nested list of ``[re, im]`` pairs."""
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise InvalidInputError("expected rows of [re, im] pairs")
        return cls(arr[..., 0] + 1j * arr[..., 1], m)

    def dense(self) -> np.ndarray:
        p, q = self.A.shape
        L = np.zeros((q + p, q + p), dtype=complex)
        L[:q, :q] = self.m * np.eye(q)
        L[q:, q:] = -self.m * np.eye(p)
        L[:q, q:] = self.A.conj().T
        L[q:, :q] = self.A
        return L


def _kernel_dims(A: np.ndarray) -> tuple[np.ndarray, int, int]:
    p, q = A.shape
    sv = np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0)
    nz = sv[sv > kernel_threshold(A)]
    return nz, q - nz.size, p - nz.size


def susy_spectrum(b: SusyBlock) -> np.ndarray:
    """Sorted eigenvalues of ``L`` with multiplicities.

    Nonzero singular values ``s`` give the pair ``+-sqrt(s^2+m^2)``; ``+m``
    appears ``dim ker A`` times and ``-m`` appears ``dim ker A*`` times.
    """
    nz, ker_a, ker_astar = _kernel_dims(b.A)
    r = np.sqrt(nz ** 2 + b.m ** 2)
    vals = np.concatenate([r, -r, np.full(ker_a, b.m), np.full(ker_astar, -b.m)])
    return np.sort(vals)


def susy_membership_pm_m(b: SusyBlock) -> tuple[bool, bool]:
    """Whether ``+m`` and ``-m`` are eigenvalues of ``L``."""
    _, ker_a, ker_astar = _kernel_dims(b.A)
    if b.m == 0.0:
        flag = ker_a > 0 or ker_astar > 0
        return flag, flag
    plus = ker_a > 0
    minus = ker_astar > 0
    # nonzero singular values never produce +-m, so the kernels decide
    return plus, minus
