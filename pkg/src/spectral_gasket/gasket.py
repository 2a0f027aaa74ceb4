"""Addressing, IFS geometry and graph approximations of the Sierpinski gasket.

Points of the gasket are named by words over ``{1, 2, 3}``.  A vertex is a
``(word, corner)`` pair meaning ``F_word(p_corner)``; every junction vertex has
exactly two such names at its own level, and :meth:`VertexId.canonical` picks
one of them so vertices can be used as dictionary keys.

Both geometries share the same combinatorics.  The Euclidean gasket uses the
maps ``F_i`` on the unit-side triangle, the harmonic gasket uses the affine maps
``H_i`` on the plane ``M_0 = {x + y + z = 0}`` expressed in a fixed orthonormal
basis.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

LETTERS = (1, 2, 3)
Word = tuple[int, ...]

EUCLIDEAN = "euclidean"
HARMONIC = "harmonic"
GEOMETRIES = (EUCLIDEAN, HARMONIC)

# Sides of a cell as (start corner, end corner); enumeration order is l < r < b.
SIDES = ("l", "r", "b")
SIDE_CORNERS = {"l": (1, 3), "r": (2, 3), "b": (1, 2)}
SIDE_RANK = {s: i for i, s in enumerate(SIDES)}

# Default cap on the graph level; 3**11 edges is the largest graph we agree to build.
MAX_GRAPH_LEVEL = 10
MAX_WORD_LENGTH = 64


class BudgetExceeded(RuntimeError):
    """A requested enumeration is larger than the configured budget."""


def check_word(word: Iterable[int]) -> Word:
    w = tuple(int(c) for c in word)
    for c in w:
        if c not in LETTERS:
            raise ValueError(f"letter {c!r} is not in {{1, 2, 3}}")
    return w


def parse_word(text: str) -> Word:
    """``"123" -> (1, 2, 3)``; ``""`` and ``"0"`` denote the empty word."""
    text = text.strip()
    if text in ("", "0"):
        return ()
    return check_word(int(c) for c in text)


def format_word(word: Word) -> str:
    return "".join(map(str, word)) if word else "0"


def words(m: int) -> Iterator[Word]:
    """All words of length ``m`` in lexicographic order."""
    return itertools.product(LETTERS, repeat=m)


def word_index(word: Word) -> int:
    """Position of ``word`` in :func:`words` of the same length."""
    idx = 0
    for c in word:
        idx = 3 * idx + (c - 1)
    return idx


class VertexId(NamedTuple):
    word: Word
    corner: int

    @classmethod
    def canonical(cls, word: Sequence[int], corner: int) -> "VertexId":
        """Canonical name of ``F_word(p_corner)``.

        ``F_{w i}(p_i) = F_w(p_i)`` lets trailing copies of the corner be
        dropped; afterwards ``F_{u i}(p_j) = F_{u j}(p_i)`` leaves two names of
        equal length and the lexicographically smaller one wins.
        """
        w = list(word)
        while w and w[-1] == corner:
            w.pop()
        if not w:
            return cls((), corner)
        other = (tuple(w[:-1]) + (corner,), w[-1])
        mine = (tuple(w), corner)
        return cls(*min(mine, other))

    @property
    def level(self) -> int:
        """Smallest ``m`` with this vertex in ``V_m`` (valid for canonical ids)."""
        return len(self.word)

    def addresses(self) -> list["VertexId"]:
        """All ``(word, corner)`` names of this vertex at its own level."""
        if not self.word:
            return [self]
        u, i = self.word[:-1], self.word[-1]
        return sorted([VertexId(self.word, self.corner), VertexId(u + (self.corner,), i)])

    def __str__(self) -> str:
        return f"{format_word(self.word)}:{self.corner}"


def parse_vertex(text: str) -> VertexId:
    """Parse ``word:corner`` syntax, e.g. ``12:3`` or ``0:1`` for a root corner."""
    try:
        w, c = text.split(":")
        corner = int(c)
    except ValueError:
        raise ValueError(f"bad vertex {text!r}; expected word:corner") from None
    if corner not in LETTERS:
        raise ValueError(f"bad corner in {text!r}")
    return VertexId.canonical(parse_word(w), corner)


class EdgeId(NamedTuple):
    cell: Word
    side: str

    @property
    def level(self) -> int:
        return len(self.cell)

    @property
    def corners(self) -> tuple[int, int]:
        return SIDE_CORNERS[self.side]

    def endpoints(self) -> tuple[VertexId, VertexId]:
        a, b = self.corners
        return VertexId.canonical(self.cell, a), VertexId.canonical(self.cell, b)

    def sort_key(self) -> tuple:
        return (len(self.cell), self.cell, SIDE_RANK[self.side])

    def children(self) -> tuple["EdgeId", "EdgeId"]:
        """The two sub-edges one level down, ordered from the start corner."""
        a, b = self.corners
        return EdgeId(self.cell + (a,), self.side), EdgeId(self.cell + (b,), self.side)

    def __str__(self) -> str:
        return f"{format_word(self.cell)}/{self.side}"


def edges(m: int) -> Iterator[EdgeId]:
    """Level-``m`` edges in enumeration order (cell lexicographic, then l < r < b)."""
    for w in words(m):
        for s in SIDES:
            yield EdgeId(w, s)


@dataclass(frozen=True)
class AffineMap:
    linear: np.ndarray
    offset: np.ndarray

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return self.linear @ np.asarray(x, dtype=float) + self.offset

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self ∘ inner``."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)

    @classmethod
    def contraction(cls, linear: np.ndarray, fixed_point: np.ndarray) -> "AffineMap":
        """``x -> linear (x - fixed_point) + fixed_point``."""
        linear = np.asarray(linear, dtype=float)
        fixed_point = np.asarray(fixed_point, dtype=float)
        return cls(linear, fixed_point - linear @ fixed_point)


# Euclidean gasket on the unit-side triangle.
P = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

# Orthonormal basis of M_0 = {x + y + z = 0} in R^3.
M0_BASIS = np.array(
    [
        [1.0, -1.0, 0.0] / np.sqrt(2.0),
        [1.0, 1.0, -2.0] / np.sqrt(6.0),
    ]
)


def to_m0(v: np.ndarray) -> np.ndarray:
    """Coordinates in ``(u_1, u_2)`` of the projection of a 3-vector onto ``M_0``."""
    return M0_BASIS @ np.asarray(v, dtype=float)


def _harmonic_frame() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = np.array([to_m0(e - 1.0 / 3.0) / np.sqrt(2.0) for e in np.eye(3)])
    f = np.empty_like(q)
    J = np.empty((3, 2, 2))
    for i in range(3):
        e = q[i] / np.linalg.norm(q[i])
        f[i] = (-e[1], e[0])
        J[i] = 0.6 * np.outer(e, e) + 0.2 * np.outer(f[i], f[i])
    return q, f, J


Q, F_PERP, J_MATRICES = _harmonic_frame()
for _a in (Q, F_PERP, J_MATRICES):
    _a.setflags(write=False)


def j_matrix(i: int) -> np.ndarray:
    """``J_i`` as a 2x2 matrix in the ``(u_1, u_2)`` basis (letters are 1-based)."""
    return J_MATRICES[i - 1]


def euclid_ifs() -> tuple[AffineMap, AffineMap, AffineMap]:
    return tuple(AffineMap.contraction(0.5 * np.eye(2), P[i]) for i in range(3))


def harmonic_ifs() -> tuple[AffineMap, AffineMap, AffineMap]:
    return tuple(AffineMap.contraction(J_MATRICES[i], Q[i]) for i in range(3))


def ifs(geometry: str) -> tuple[AffineMap, AffineMap, AffineMap]:
    if geometry == EUCLIDEAN:
        return euclid_ifs()
    if geometry == HARMONIC:
        return harmonic_ifs()
    raise ValueError(f"unknown geometry {geometry!r}")


def base_points(geometry: str) -> np.ndarray:
    return P if geometry == EUCLIDEAN else Q


def apply_word(maps: Sequence[AffineMap], w: Sequence[int], x: Sequence[float]) -> np.ndarray:
    """``(map_{w_1} ∘ ... ∘ map_{w_m})(x)``; the last letter acts first."""
    y = np.asarray(x, dtype=float)
    for c in reversed(tuple(w)):
        y = maps[c - 1](y)
    return y


@dataclass(frozen=True)
class LengthGraph:
    """Level-``m`` graph approximation with a length attached to every edge.

    ``vertices`` maps canonical vertex ids to plane coordinates; ``edges`` is a
    tuple of ``(EdgeId, length, (u, v))`` in enumeration order.
    """

    level: int
    geometry: str
    vertices: dict[VertexId, tuple[float, float]]
    edges: tuple[tuple[EdgeId, float, tuple[VertexId, VertexId]], ...]
    refinement: int | None = None
    scale: float = field(default=1.0, compare=False)

    @cached_property
    def vertex_list(self) -> list[VertexId]:
        return list(self.vertices)

    @cached_property
    def index(self) -> dict[VertexId, int]:
        return {v: i for i, v in enumerate(self.vertex_list)}

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float, int]]]:
        """``adjacency[i]`` lists ``(neighbour, length, edge position)``."""
        adj: list[list[tuple[int, float, int]]] = [[] for _ in self.vertices]
        idx = self.index
        for k, (_, length, (u, v)) in enumerate(self.edges):
            adj[idx[u]].append((idx[v], length, k))
            adj[idx[v]].append((idx[u], length, k))
        return adj

    @property
    def lengths(self) -> np.ndarray:
        return np.array([length for _, length, _ in self.edges])

    def __contains__(self, v: object) -> bool:
        return v in self.vertices

    def resolve(self, v: VertexId) -> VertexId:
        """Canonical id of ``v``; raises ``KeyError`` if it is not a vertex of this graph."""
        c = VertexId.canonical(v.word, v.corner)
        if c not in self.vertices:
            raise KeyError(f"{c} is not a vertex of the level-{self.level} graph")
        return c

    def edge_length(self, e: EdgeId) -> float:
        return self._edge_pos[e][1]

    @cached_property
    def _edge_pos(self) -> dict[EdgeId, tuple[int, float]]:
        return {e: (k, length) for k, (e, length, _) in enumerate(self.edges)}

    def scaled(self, c: float) -> "LengthGraph":
        """Same graph with every edge length multiplied by ``c > 0``."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return LengthGraph(
            self.level,
            self.geometry,
            self.vertices,
            tuple((e, c * length, uv) for e, length, uv in self.edges),
            self.refinement,
            self.scale * c,
        )


def build_length_graph(
    geometry: str,
    m: int,
    refinement: int = 12,
    *,
    max_level: int = MAX_GRAPH_LEVEL,
    lengths: dict[EdgeId, float] | None = None,
) -> LengthGraph:
    """Enumerate the ``3**(m+1)`` edges of level ``m`` and attach their lengths.

    Euclidean edges have length ``2**-m``.  Harmonic edges get the length of
    their Φ-image polyline at ``refinement`` extra levels; ``lengths`` may
    supply precomputed values (e.g. from an on-disk cache).
    """
    if geometry not in GEOMETRIES:
        raise ValueError(f"unknown geometry {geometry!r}")
    if m < 0:
        raise ValueError("level must be non-negative")
    if m > max_level:
        raise BudgetExceeded(f"level {m} exceeds the enumeration budget (max {max_level})")

    if geometry == EUCLIDEAN:
        side_len = 0.5**m

        def length_of(e: EdgeId) -> float:
            return side_len

        coords = _euclid_vertex_coords(m)
        refinement_used = None
    else:
        from .geodesics import harmonic_side_lengths
        from .harmonic import phi_table

        if lengths is None:
            table = harmonic_side_lengths(m, refinement)[m]

            def length_of(e: EdgeId) -> float:
                return float(table[word_index(e.cell), SIDE_RANK[e.side]])

        else:

            def length_of(e: EdgeId) -> float:
                return lengths[e]

        coords = phi_table(m)
        refinement_used = refinement

    vertices: dict[VertexId, tuple[float, float]] = {}
    edge_list = []
    for e in edges(m):
        u, v = e.endpoints()
        for x in (u, v):
            if x not in vertices:
                vertices[x] = coords[x]
        edge_list.append((e, length_of(e), (u, v)))
    return LengthGraph(m, geometry, vertices, tuple(edge_list), refinement_used)


def _euclid_vertex_coords(m: int) -> dict[VertexId, tuple[float, float]]:
    maps = euclid_ifs()
    out: dict[VertexId, tuple[float, float]] = {}
    for w in words(m):
        for c in LETTERS:
            v = VertexId.canonical(w, c)
            if v not in out:
                out[v] = tuple(apply_word(maps, v.word, P[v.corner - 1]))
    return out


def vertex_count(m: int) -> int:
    return (3 ** (m + 1) + 3) // 2


def edge_count(m: int) -> int:
    return 3 ** (m + 1)
