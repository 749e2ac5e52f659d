"""Planar metric graphs with a uniform magnetic field and Rashba coupling.

Each directed edge ``alpha -> beta`` carries the transport matrix

    tau = exp(i * int_0^l a) * (cos(k_R l) I + i sin(k_R l) sigma),

with ``a = B/2 * (alpha x e)`` in the symmetric gauge and ``sigma`` the
off-diagonal spin matrix built from the edge direction ``e``.

Graph description files are plain text, one record per line, ``#`` comments::

    B 0.5            # field strength B_z
    k_R 0.25         # Rashba constant
    vertex 0 0.0 0.0 0.0     # id x y [epsilon]
    vertex 1 1.0 0.0
    edge 0 1 pot.txt         # tail head [potential file, two columns "t value"]

Potential files are resolved relative to the graph file; their last ``t``
must equal the Euclidean edge length to 1e-9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .edge_solver import EdgePotential, load_potential
from .errors import InvalidInputError

UNITARY_TOL = 1e-12
LENGTH_TOL = 1e-9
I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class Vertex:
    id: Hashable
    x: float
    y: float
    epsilon: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Edge:
    tail: Hashable
    head: Hashable
    length: float
    potential: EdgePotential
    direction: tuple[float, float]


@dataclass(frozen=True)
class MagneticField:
    """Uniform field ``(0, 0, strength)`` in the symmetric gauge."""

    strength: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.strength):
            raise InvalidInputError("field strength must be finite")


@dataclass(frozen=True)
class Transport:
    matrix: np.ndarray
    edge: int | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidInputError("transport matrix must be 2x2")
        if np.max(np.abs(m.conj().T @ m - I2)) > UNITARY_TOL:
            raise InvalidInputError("transport matrix is not unitary")
        object.__setattr__(self, "matrix", m)


def edge_magnetic_potential(field: MagneticField, origin, direction) -> float:
    """Constant magnetic potential ``<A(alpha), e>`` on an edge leaving ``origin``."""
    ax, ay = float(origin[0]), float(origin[1])
    ex, ey = float(direction[0]), float(direction[1])
    return 0.5 * field.strength * (ax * ey - ay * ex)


def sigma_matrix(direction) -> np.ndarray:
    """Spin matrix ``[[0, e2 + i e1], [e2 - i e1, 0]]`` of a unit direction."""
    e1, e2 = float(direction[0]), float(direction[1])
    if not math.isclose(math.hypot(e1, e2), 1.0, abs_tol=1e-12):
        raise InvalidInputError(f"direction {direction!r} is not a unit vector")
    return np.array([[0.0, e2 + 1j * e1], [e2 - 1j * e1, 0.0]])


def transport_matrix(a_integral: float, k_R: float, l: float, sigma, edge: int | None = None) -> Transport:
    sigma = np.asarray(sigma, dtype=complex)
    if np.max(np.abs(sigma @ sigma - I2)) > 1e-10:
        raise InvalidInputError("sigma must square to the identity")
    m = np.exp(1j * a_integral) * (math.cos(k_R * l) * I2 + 1j * math.sin(k_R * l) * sigma)
    return Transport(m, edge)


@dataclass(frozen=True, eq=False)
class GraphModel:
    """Finite embedded metric graph.

    ``gauge`` optionally adds ``grad chi`` to the vector potential, given as
    vertex values of ``chi``; along each edge it contributes the constant
    ``(chi(head) - chi(tail)) / l`` to the magnetic potential.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    field: MagneticField = MagneticField()
    k_R: float = 0.0
    gauge: Mapping[Hashable, float] | None = None
    index: dict = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        if not math.isfinite(self.k_R):
            raise InvalidInputError("k_R must be finite")
        index = {}
        for i, v in enumerate(self.vertices):
            if v.id in index:
                raise InvalidInputError(f"duplicate vertex id {v.id!r}")
            index[v.id] = i
        object.__setattr__(self, "index", index)
        pos = np.array([[v.x, v.y] for v in self.vertices], dtype=float).reshape(-1, 2)
        if len(pos) > 1:
            d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
            d[np.diag_indices_from(d)] = np.inf
            if d.min() <= 0:
                raise InvalidInputError("vertex positions must be pairwise distinct")
        deg = np.zeros(len(self.vertices), dtype=int)
        for e in self.edges:
            if e.tail not in index or e.head not in index:
                raise InvalidInputError(f"edge {e.tail!r}->{e.head!r} references an unknown vertex")
            if e.tail == e.head:
                raise InvalidInputError("loops are not supported")
            p, q = pos[index[e.tail]], pos[index[e.head]]
            dist = float(np.linalg.norm(q - p))
            if abs(dist - e.length) > LENGTH_TOL:
                raise InvalidInputError(f"edge {e.tail!r}->{e.head!r}: length {e.length} != |head-tail| = {dist}")
            if abs(e.potential.length - e.length) > LENGTH_TOL:
                raise InvalidInputError(f"edge {e.tail!r}->{e.head!r}: potential length mismatch")
            expected = (q - p) / dist
            if np.max(np.abs(np.asarray(e.direction) - expected)) > LENGTH_TOL:
                raise InvalidInputError(f"edge {e.tail!r}->{e.head!r}: direction inconsistent with embedding")
            deg[index[e.tail]] += 1
            deg[index[e.head]] += 1
        if len(self.vertices) and deg.min() < 1:
            raise InvalidInputError("isolated vertices are not allowed")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for e in self.edges:
            deg[self.index[e.tail]] += 1
            deg[self.index[e.head]] += 1
        return deg

    def magnetic_potential(self, k: int) -> float:
        """Constant magnetic potential on edge ``k`` including any gauge shift."""
        e = self.edges[k]
        tail = self.vertices[self.index[e.tail]]
        a = edge_magnetic_potential(self.field, (tail.x, tail.y), e.direction)
        if self.gauge:
            a += (self.gauge.get(e.head, 0.0) - self.gauge.get(e.tail, 0.0)) / e.length
        return a

    def transport(self, k: int) -> Transport:
        e = self.edges[k]
        return transport_matrix(self.magnetic_potential(k) * e.length, self.k_R, e.length,
                                sigma_matrix(e.direction), edge=k)

    def with_epsilon(self, eps: Mapping[Hashable, float] | Sequence[float]) -> GraphModel:
        if isinstance(eps, Mapping):
            vals = [float(eps.get(v.id, v.epsilon)) for v in self.vertices]
        else:
            vals = [float(x) for x in eps]
        verts = tuple(Vertex(v.id, v.x, v.y, e) for v, e in zip(self.vertices, vals))
        return GraphModel(verts, self.edges, self.field, self.k_R, self.gauge)


def make_edge(tail: Vertex, head: Vertex, potential: EdgePotential | None = None) -> Edge:
    """Edge between two vertices with length and direction taken from the embedding."""
    d = np.array([head.x - tail.x, head.y - tail.y])
    l = float(np.linalg.norm(d))
    if l <= 0:
        raise InvalidInputError("edge endpoints coincide")
    pot = potential if potential is not None else EdgePotential.zero(l)
    return Edge(tail.id, head.id, l, pot, (float(d[0] / l), float(d[1] / l)))


def build_graph(points, edge_pairs, *, epsilon=None, potential=None, B: float = 0.0,
                k_R: float = 0.0, gauge=None) -> GraphModel:
    """Graph from vertex coordinates and ``(tail, head)`` index pairs; one shared potential."""
    eps = list(epsilon) if epsilon is not None else [0.0] * len(points)
    verts = [Vertex(i, float(p[0]), float(p[1]), float(eps[i])) for i, p in enumerate(points)]
    edges = [make_edge(verts[a], verts[b], potential) for a, b in edge_pairs]
    return GraphModel(tuple(verts), tuple(edges), MagneticField(B), k_R, gauge)


def interval_graph(length: float = 1.0, **kw) -> GraphModel:
    return build_graph([(0.0, 0.0), (length, 0.0)], [(0, 1)], **kw)


def star_graph(arms: int = 3, length: float = 1.0, **kw) -> GraphModel:
    """Centre vertex 0 joined to ``arms`` leaves; edges point outwards."""
    pts = [(0.0, 0.0)] + [(length * math.cos(2 * math.pi * j / arms), length * math.sin(2 * math.pi * j / arms))
                          for j in range(arms)]
    return build_graph(pts, [(0, j + 1) for j in range(arms)], **kw)


def square_cycle(side: float = 1.0, origin=(0.0, 0.0), **kw) -> GraphModel:
    """The 4-cycle on a square, oriented counter-clockwise."""
    ox, oy = origin
    pts = [(ox, oy), (ox + side, oy), (ox + side, oy + side), (ox, oy + side)]
    return build_graph(pts, [(0, 1), (1, 2), (2, 3), (3, 0)], **kw)


def parse_graph_file(path) -> GraphModel:
    """Read a graph description (see module docstring)."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read graph file {path}: {exc}") from exc
    B = 0.0
    k_R = 0.0
    verts: dict[str, Vertex] = {}
    raw_edges = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        try:
            if key == "B":
                B = float(tok[1])
            elif key == "k_R":
                k_R = float(tok[1])
            elif key == "vertex":
                vid = tok[1]
                if vid in verts:
                    raise InvalidInputError(f"{path}:{lineno}: duplicate vertex id {vid!r}")
                eps = float(tok[4]) if len(tok) > 4 else 0.0
                verts[vid] = Vertex(vid, float(tok[2]), float(tok[3]), eps)
            elif key == "edge":
                raw_edges.append((lineno, tok[1], tok[2], tok[3] if len(tok) > 3 else None))
            else:
                raise InvalidInputError(f"{path}:{lineno}: unknown record {key!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"{path}:{lineno}: malformed record: {raw!r}") from exc
    edges = []
    for lineno, a, b, potfile in raw_edges:
        if a not in verts or b not in verts:
            raise InvalidInputError(f"{path}:{lineno}: edge references unknown vertex")
        tail, head = verts[a], verts[b]
        length = math.hypot(head.x - tail.x, head.y - tail.y)
        pot = None
        if potfile is not None:
            pot = load_potential(path.parent / potfile)
            if abs(pot.length - length) > LENGTH_TOL:
                raise InvalidInputError(
                    f"{path}:{lineno}: potential grid ends at {pot.length}, edge length is {length}")
            pot = EdgePotential.sampled(pot.t, pot.values, length=length)
        edges.append(make_edge(tail, head, pot))
    return GraphModel(tuple(verts.values()), tuple(edges), MagneticField(B), k_R)
