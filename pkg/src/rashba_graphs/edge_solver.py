"""Fundamental solutions of the scalar edge equation ``-y'' + U y = z y``.

``s`` and ``c`` are fixed by ``s(0)=c'(0)=0`` and ``s'(0)=c(0)=1``.  Their
endpoint values at ``t = l`` are all the vertex conditions ever need.

Zero and constant potentials use closed forms.  Sampled potentials are
linearly interpolated and integrated with RK4 (compensated summation) on
about 4096 steps whose boundaries include every sample point, doubling the
step count until two successive refinements agree to ``1e-9`` (relative to
the magnitude of the values).  Results are cached per potential and energy
grid, since root searches revisit the same grids.
"""
from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numba
import numpy as np

from .errors import InvalidInputError
from .roots import find_roots

log = logging.getLogger(__name__)

BASE_STEPS = 4096
MAX_STEPS = 2**20
RICHARDSON_TOL = 1e-9
DIRICHLET_SCAN_STEP = 0.05
VALUE_CACHE_ENTRIES = 4096
VALUE_CACHE_BYTES = 64 * 2 ** 20


@dataclass(frozen=True, eq=False)
class EdgePotential:
    """Real scalar potential on ``[0, length]``.

    ``kind`` is ``"zero"``, ``"constant"`` (value ``u0``) or ``"sampled"``
    (strictly increasing ``t`` from 0 to ``length`` with ``values``).
    Construct through :meth:`zero`, :meth:`constant` or :meth:`sampled`.
    """

    kind: str
    length: float = 1.0
    u0: float = 0.0
    t: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "sampled"):
            raise InvalidInputError(f"unknown potential kind {self.kind!r}")
        if not (math.isfinite(self.length) and self.length > 0):
            raise InvalidInputError("edge length must be positive and finite")
        if not math.isfinite(self.u0):
            raise InvalidInputError("non-finite constant potential")
        if self.kind == "sampled":
            t = np.asarray(self.t, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise InvalidInputError("sampled potential needs matching 1-D grids with >= 2 points")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
                raise InvalidInputError("non-finite potential samples")
            if np.any(np.diff(t) <= 0):
                raise InvalidInputError("sample grid must be strictly increasing")
            if t[0] != 0.0 or abs(t[-1] - self.length) > 1e-9 * max(1.0, self.length):
                raise InvalidInputError("sample grid must start at 0 and end at the edge length")
            t = t.copy()
            t[-1] = self.length
            t.flags.writeable = False
            v = v.copy()
            v.flags.writeable = False
            object.__setattr__(self, "t", t)
            object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, length: float = 1.0) -> EdgePotential:
        return cls("zero", float(length))

    @classmethod
    def constant(cls, u0: float, length: float = 1.0) -> EdgePotential:
        return cls("constant", float(length), u0=float(u0))

    @classmethod
    def sampled(cls, t, values, length: float | None = None) -> EdgePotential:
        t = np.asarray(t, dtype=float)
        return cls("sampled", float(t[-1] if length is None else length), t=t, values=values)

    def __call__(self, t):
        """Potential value(s) at ``t`` (linear interpolation for sampled data)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "sampled":
            return np.interp(t, self.t, self.values)
        return np.full_like(t, self.u0 if self.kind == "constant" else 0.0)

    def is_even(self, tol: float = 1e-12) -> bool:
        """Whether ``U(t) = U(l - t)`` holds on the sample grid."""
        if self.kind != "sampled":
            return True
        mirrored = np.interp(self.length - self.t, self.t, self.values)
        return bool(np.max(np.abs(mirrored - self.values)) <= tol * max(1.0, np.max(np.abs(self.values))))

    @cached_property
    def _half_step_cache(self) -> dict:
        return {}

    @cached_property
    def _values_cache(self) -> OrderedDict:
        return OrderedDict()

    @cached_property
    def _values_cache_bytes(self) -> list:
        return [0]

    def step_nodes(self, n: int) -> np.ndarray:
        """About ``n`` RK4 steps of size near ``l/n``, with every sample point a step boundary.

        Between sample points the interpolated potential is linear, so RK4
        keeps its full order; steps straddling a kink would not.
        """
        if self.kind != "sampled":
            return np.linspace(0.0, self.length, n + 1)
        counts = np.maximum(1, np.rint(np.diff(self.t) * n / self.length).astype(int))
        pieces = [np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(self.t[:-1], self.t[1:], counts)]
        return np.concatenate(pieces + [self.t[-1:]])

    def steps_on(self, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Step sizes and the potential at step ends and midpoints (length ``2*steps + 1``)."""
        tk = np.empty(2 * nodes.size - 1)
        tk[0::2] = nodes
        tk[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
        return np.ascontiguousarray(np.diff(nodes)), np.ascontiguousarray(self(tk))

    def half_step_samples(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Cached :meth:`steps_on` for :meth:`step_nodes` ``(n)``."""
        cache = self._half_step_cache
        if n not in cache:
            cache[n] = self.steps_on(self.step_nodes(n))
        return cache[n]


@dataclass(frozen=True)
class EdgeSolution:
    """Endpoint values ``s(l), s'(l), c(l), c'(l)`` at spectral parameter ``z``."""

    s: float
    s_prime: float
    c: float
    c_prime: float
    z: float
    l: float

    @property
    def wronskian(self) -> float:
        return self.c * self.s_prime - self.c_prime * self.s


def load_potential(path, length: float | None = None) -> EdgePotential:
    """Read a two-column ``t value`` text file ('#' starts a comment)."""
    path = Path(path)
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except OSError as exc:
        raise InvalidInputError(f"cannot read potential file {path}: {exc}") from exc
    except ValueError as exc:
        raise InvalidInputError(f"malformed potential file {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise InvalidInputError(f"{path}: expected two columns 't value'")
    return EdgePotential.sampled(data[:, 0], data[:, 1], length=length)


# --------------------------------------------------------------------------
# closed forms


def _closed_form(w: np.ndarray, l: float):
    """(s, s', c, c') at t = l for ``-y'' = w y``, vectorised over w."""
    w = np.asarray(w, dtype=float)
    s = np.empty_like(w)
    sp = np.empty_like(w)
    c = np.empty_like(w)
    cp = np.empty_like(w)
    pos = w > 0
    neg = w < 0
    nul = ~(pos | neg)
    k = np.sqrt(w[pos])
    s[pos] = np.sin(k * l) / k
    sp[pos] = np.cos(k * l)
    c[pos] = sp[pos]
    cp[pos] = -k * np.sin(k * l)
    kap = np.sqrt(-w[neg])
    s[neg] = np.sinh(kap * l) / kap
    sp[neg] = np.cosh(kap * l)
    c[neg] = sp[neg]
    cp[neg] = kap * np.sinh(kap * l)
    s[nul] = l
    sp[nul] = 1.0
    c[nul] = 1.0
    cp[nul] = 0.0
    return s, sp, c, cp


def _closed_form_profile(w: float, t: np.ndarray):
    """s(t), s'(t), c(t), c'(t) for constant ``w = z - u0``."""
    t = np.asarray(t, dtype=float)
    if w > 0:
        k = math.sqrt(w)
        return np.sin(k * t) / k, np.cos(k * t), np.cos(k * t), -k * np.sin(k * t)
    if w < 0:
        k = math.sqrt(-w)
        return np.sinh(k * t) / k, np.cosh(k * t), np.cosh(k * t), k * np.sinh(k * t)
    return t.copy(), np.ones_like(t), np.ones_like(t), np.zeros_like(t)


# --------------------------------------------------------------------------
# RK4 kernels for y'' = (U - z) y


@numba.njit(cache=True)
def _rk4_endpoint(u, hs, z, y, yp):
    ey = 0.0
    ep = 0.0
    for k in range(hs.size):
        h = hs[k]
        a0 = u[2 * k] - z
        am = u[2 * k + 1] - z
        a1 = u[2 * k + 2] - z
        k1 = yp
        l1 = a0 * y
        k2 = yp + 0.5 * h * l1
        l2 = am * (y + 0.5 * h * k1)
        k3 = yp + 0.5 * h * l2
        l3 = am * (y + 0.5 * h * k2)
        k4 = yp + h * l3
        l4 = a1 * (y + h * k3)
        dy = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - ey
        tmp = y + dy
        ey = (tmp - y) - dy
        y = tmp
        dp = h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4) - ep
        tmp = yp + dp
        ep = (tmp - yp) - dp
        yp = tmp
    return y, yp


@numba.njit(cache=True)
def _rk4_many(u, hs, zs, out):
    for i in range(zs.size):
        s, sp = _rk4_endpoint(u, hs, zs[i], 0.0, 1.0)
        c, cp = _rk4_endpoint(u, hs, zs[i], 1.0, 0.0)
        out[i, 0] = s
        out[i, 1] = sp
        out[i, 2] = c
        out[i, 3] = cp


@numba.njit(cache=True)
def _rk4_path(u, hs, z, y, yp, ys, yps):
    ey = 0.0
    ep = 0.0
    ys[0] = y
    yps[0] = yp
    for k in range(hs.size):
        h = hs[k]
        a0 = u[2 * k] - z
        am = u[2 * k + 1] - z
        a1 = u[2 * k + 2] - z
        k1 = yp
        l1 = a0 * y
        k2 = yp + 0.5 * h * l1
        l2 = am * (y + 0.5 * h * k1)
        k3 = yp + 0.5 * h * l2
        l3 = am * (y + 0.5 * h * k2)
        k4 = yp + h * l3
        l4 = a1 * (y + h * k3)
        dy = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - ey
        tmp = y + dy
        ey = (tmp - y) - dy
        y = tmp
        dp = h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4) - ep
        tmp = yp + dp
        ep = (tmp - yp) - dp
        yp = tmp
        ys[k + 1] = y
        yps[k + 1] = yp


def _integrate(pot: EdgePotential, zs: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((zs.size, 4))
    hs, u = pot.half_step_samples(n)
    _rk4_many(u, hs, zs, out)
    return out


def _integrate_sampled(pot: EdgePotential, zs: np.ndarray) -> np.ndarray:
    n = BASE_STEPS
    coarse = _integrate(pot, zs, n)
    result = np.empty_like(coarse)
    todo = np.arange(zs.size)
    while todo.size:
        fine = _integrate(pot, zs[todo], 2 * n)
        scale = np.maximum(1.0, np.max(np.abs(fine), axis=1))
        ok = np.max(np.abs(fine - coarse), axis=1) <= RICHARDSON_TOL * scale
        result[todo[ok]] = fine[ok]
        todo = todo[~ok]
        if not todo.size:
            break
        n *= 2
        if 2 * n > MAX_STEPS:
            log.warning("RK4 step refinement exhausted for %d spectral values", todo.size)
            result[todo] = fine[~ok]
            break
        coarse = fine[~ok]
    return result


def _cached_integration(pot: EdgePotential, zs: np.ndarray) -> np.ndarray:
    """Root searches revisit the same energy grids; the potential is immutable, so reuse results."""
    cache = pot._values_cache
    key = zs.tobytes()
    hit = cache.get(key)
    if hit is not None:
        cache.move_to_end(key)
        return hit
    vals = _integrate_sampled(pot, zs)
    vals.flags.writeable = False
    cache[key] = vals
    total = pot._values_cache_bytes
    total[0] += vals.nbytes
    while len(cache) > VALUE_CACHE_ENTRIES or total[0] > VALUE_CACHE_BYTES:
        total[0] -= cache.popitem(last=False)[1].nbytes
    return vals


def fundamental_values(pot: EdgePotential, z):
    """Vectorised endpoint values; returns arrays ``(s, s', c, c')`` shaped like ``z``."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("spectral parameter must be finite")
    flat = np.ascontiguousarray(z.reshape(-1))
    if pot.kind == "sampled":
        vals = _cached_integration(pot, flat)
        parts = [vals[:, i].copy() for i in range(4)]
    else:
        w = flat - (pot.u0 if pot.kind == "constant" else 0.0)
        parts = list(_closed_form(w, pot.length))
    return tuple(p.reshape(z.shape) for p in parts)


def solve_fundamental(pot: EdgePotential, z: float) -> EdgeSolution:
    """Endpoint values of the fundamental solutions at spectral parameter ``z``.

    >>> sol = solve_fundamental(EdgePotential.zero(1.0), 0.0)
    >>> (sol.s, sol.s_prime, sol.c, sol.c_prime)
    (1.0, 1.0, 1.0, 0.0)
    """
    z = float(z)
    s, sp, c, cp = fundamental_values(pot, np.array([z]))
    return EdgeSolution(float(s[0]), float(sp[0]), float(c[0]), float(cp[0]), z, pot.length)


def fundamental_profile(pot: EdgePotential, z: float, samples: int):
    """``t`` grid with ``samples`` points and s(t), s'(t), c(t), c'(t) along it."""
    if samples < 2:
        raise InvalidInputError("need at least two samples per edge")
    if not math.isfinite(z):
        raise InvalidInputError("spectral parameter must be finite")
    t = np.linspace(0.0, pot.length, samples)
    if pot.kind != "sampled":
        w = z - (pot.u0 if pot.kind == "constant" else 0.0)
        return (t, *_closed_form_profile(w, t))
    nodes = np.union1d(pot.step_nodes(2 * BASE_STEPS), t)
    keep = np.searchsorted(nodes, t)
    hs, u = pot.steps_on(nodes)
    out = []
    for y0, yp0 in ((0.0, 1.0), (1.0, 0.0)):
        ys = np.empty(nodes.size)
        yps = np.empty(nodes.size)
        _rk4_path(u, hs, z, y0, yp0, ys, yps)
        out.extend([ys[keep], yps[keep]])
    return (t, *out)


def t_epsilon(pot: EdgePotential, eps: float, k_R: float, E):
    """``c(l; E + k_R^2) + eps * s(l; E + k_R^2)`` (vectorised over ``E``)."""
    E = np.asarray(E, dtype=float)
    s, _, c, _ = fundamental_values(pot, E + k_R * k_R)
    out = c + eps * s
    return float(out) if out.ndim == 0 else out


def dirichlet_eigenvalues(pot: EdgePotential, k_R: float, window, step: float = DIRICHLET_SCAN_STEP) -> list[float]:
    """Energies in the open window with ``s(l; E + k_R^2) = 0``, ascending."""
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise InvalidInputError("window must satisfy E_min < E_max")
    shift = k_R * k_R

    def s_of(E):
        return fundamental_values(pot, E + shift)[0]

    return [float(r) for r in find_roots(s_of, lo, hi, step)]
