"""Scalar root location on a window: bracketing, bisection, tangential roots.

All callables passed here must accept a 1-D float array and return an array of
the same shape.  Windows are treated as open intervals: roots closer than
``endpoint_margin`` to either end are dropped.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

ArrayFunc = Callable[[np.ndarray], np.ndarray]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def memoize_array(f: ArrayFunc, max_entries: int = 4096) -> ArrayFunc:
    """Cache ``f`` on whole input arrays; repeated scans over one grid cost one evaluation."""
    cache: dict[bytes, np.ndarray] = {}

    def g(x):
        x = np.ascontiguousarray(x, dtype=float)
        key = x.tobytes()
        hit = cache.get(key)
        if hit is None:
            if len(cache) >= max_entries:
                cache.pop(next(iter(cache)))
            hit = np.asarray(f(x), dtype=float)
            cache[key] = hit
        return hit

    return g


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"bad window [{lo}, {hi}]")
    if step <= 0:
        raise ValueError("step must be positive")
    n = max(int(math.ceil((hi - lo) / step)), 2)
    return np.linspace(lo, hi, n + 1)


def bisect(f: ArrayFunc, a: np.ndarray, b: np.ndarray, fa: np.ndarray,
           xtol: float = 1e-10) -> np.ndarray:
    """Lockstep bisection on many sign-change brackets at once."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    if a.size == 0:
        return a
    sa = np.sign(np.array(fa, dtype=float))
    width = float(np.max(b - a))
    iters = max(int(math.ceil(math.log2(max(width, xtol) / xtol))) + 1, 1)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = np.sign(f(mid))
        exact = fm == 0
        right = fm == sa
        a = np.where(right | exact, mid, a)
        b = np.where(~right, mid, b)
    return 0.5 * (a + b)


def _extremum(f: ArrayFunc, a: np.ndarray, b: np.ndarray, iters: int = 32) -> np.ndarray:
    """Locate an interior extremum of f on each [a, b] via the sign of a central difference."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)

    def slope(x):
        d = 1e-6 * np.maximum(1.0, np.abs(x))
        return f(x + d) - f(x - d)

    ga = np.sign(slope(a))
    for _ in range(iters):
        mid = 0.5 * (a + b)
        gm = np.sign(slope(mid))
        same = gm == ga
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    return 0.5 * (a + b)


def _merge(roots: np.ndarray, merge_tol: float, prefer: np.ndarray | None = None) -> np.ndarray:
    if roots.size == 0:
        return roots
    roots = np.sort(roots)
    out = []
    cluster = [roots[0]]
    for r in roots[1:]:
        if r - cluster[-1] <= merge_tol:
            cluster.append(r)
        else:
            out.append(cluster)
            cluster = [r]
    out.append(cluster)
    merged = []
    for c in out:
        pick = None
        if prefer is not None and prefer.size:
            near = prefer[(prefer >= c[0] - merge_tol) & (prefer <= c[-1] + merge_tol)]
            if near.size:
                pick = float(near[0])
        merged.append(pick if pick is not None else float(np.mean(c)))
    return np.array(merged)


def find_roots(f: ArrayFunc, lo: float, hi: float, step: float, *,
               xtol: float = 1e-10, touch_tol: float = 1e-8,
               merge_tol: float = 1e-6, endpoint_margin: float = 1e-9) -> np.ndarray:
    """All roots of ``f`` in the open window ``(lo, hi)``.

    The scan grid is split at every sampled extremum so that each piece is
    monotone at scan resolution.  Sign changes are bisected to ``xtol``;
    extrema with ``|f| <= touch_tol`` are reported as tangential roots.
    """
    x = _grid(lo, hi, step)
    y = np.asarray(f(x), dtype=float)
    d = np.diff(y)
    idx = np.nonzero(d[:-1] * d[1:] < 0)[0] + 1
    touches = np.empty(0)
    if idx.size:
        xe = _extremum(f, x[idx - 1], x[idx + 1])
        ye = np.asarray(f(xe), dtype=float)
        touches = xe[np.abs(ye) <= touch_tol]
        x = np.concatenate([x, xe])
        y = np.concatenate([y, ye])
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
    exact = x[y == 0.0]
    sc = np.nonzero(y[:-1] * y[1:] < 0)[0]
    crossed = bisect(f, x[sc], x[sc + 1], y[sc], xtol)
    roots = np.concatenate([exact, crossed, touches])
    roots = _merge(roots, merge_tol, prefer=np.sort(touches))
    keep = (roots > lo + endpoint_margin) & (roots < hi - endpoint_margin)
    return roots[keep]


def golden_section_min(f: Callable[[float], float], a: float, b: float,
                       xtol: float = 1e-10, maxiter: int = 200) -> tuple[float, float]:
    """Minimise a unimodal scalar function on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    for cand, fv in ((c, fc), (d, fd)):
        if fv < fx:
            x, fx = cand, fv
    return x, fx


def preimage_of_interval(f: ArrayFunc, lo_val: float, hi_val: float, window: tuple[float, float],
                         step: float, slack: float = 1e-12) -> list[tuple[float, float]]:
    """Closed pieces of ``{E in window : lo_val <= f(E) <= hi_val}``.

    Degenerate pieces ``(E, E)`` mark isolated touching points.
    """
    wlo, whi = window
    r1 = find_roots(lambda x: f(x) - lo_val, wlo, whi, step, endpoint_margin=0.0)
    r2 = find_roots(lambda x: f(x) - hi_val, wlo, whi, step, endpoint_margin=0.0)
    bps = np.unique(np.concatenate([[wlo, whi], r1, r2]))
    bps = bps[(bps >= wlo) & (bps <= whi)]
    if bps.size < 2:
        return []
    mids = 0.5 * (bps[:-1] + bps[1:])
    fm = np.asarray(f(mids), dtype=float)
    inside = (fm >= lo_val - slack) & (fm <= hi_val + slack)
    fb = np.asarray(f(bps), dtype=float)
    tol = 1e-8 * max(1.0, abs(lo_val), abs(hi_val))
    at_bp = (fb >= lo_val - tol) & (fb <= hi_val + tol)
    pieces: list[list[float]] = []
    for i, ok in enumerate(inside):
        if not ok:
            continue
        if pieces and pieces[-1][1] == bps[i]:
            pieces[-1][1] = float(bps[i + 1])
        else:
            pieces.append([float(bps[i]), float(bps[i + 1])])
    covered = set()
    for p in pieces:
        covered.add(p[0])
        covered.add(p[1])
    for j, b in enumerate(bps):
        if at_bp[j] and float(b) not in covered and wlo < b < whi:
            pieces.append([float(b), float(b)])
    pieces.sort()
    return [(p[0], p[1]) for p in pieces]
