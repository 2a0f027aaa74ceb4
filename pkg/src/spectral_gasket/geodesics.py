"""Edge-curve lengths, shortest paths on length graphs and harmonic path integrals.

A harmonic edge ``Φ(R)`` is approximated by the polyline through the Φ-images
of the ``2**k + 1`` vertices on the edge ``k`` levels further down.  Each chord
of that polyline is a side of a small cell ``u`` and equals
``J_u (q_b - q_a)``.  Chords are always computed by applying the letters of
``u`` right to left to the root side vector, and summed pairwise, so the length
of an edge at refinement ``k + 1`` is bit-for-bit the sum of its two child
edges at refinement ``k``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .gasket import (
    EUCLIDEAN,
    HARMONIC,
    LETTERS,
    MAX_WORD_LENGTH,
    P,
    Q,
    SIDES,
    EdgeId,
    LengthGraph,
    VertexId,
    Word,
    apply_word,
    euclid_ifs,
    j_matrix,
    word_index,
)
from .harmonic import kusuoka_Zm, phi

DEFAULT_REFINEMENT = 12
MAX_REFINEMENT = 20


class Address(NamedTuple):
    """Infinite word ``prefix + tail tail tail ...`` naming a point of the gasket."""

    prefix: Word
    tail: int

    def truncate(self, depth: int) -> Word:
        if depth <= len(self.prefix):
            return self.prefix[:depth]
        return self.prefix + (self.tail,) * (depth - len(self.prefix))


def pairwise_sum(x: np.ndarray) -> np.ndarray:
    """Balanced pairwise sum over the last axis (zero-padded to a power of two)."""
    n = x.shape[-1]
    if n == 0:
        return np.zeros(x.shape[:-1])
    size = 1 << (n - 1).bit_length()
    if size != n:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, size - n)]
        x = np.pad(x, pad)
    while x.shape[-1] > 1:
        x = x[..., 0::2] + x[..., 1::2]
    return x[..., 0]


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray
    length: float
    addresses: tuple[Address, ...] | None = None

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a polyline needs at least two points")

    @classmethod
    def from_points(cls, points, addresses=None) -> "Polyline":
        pts = np.asarray(points, dtype=float)
        d = np.diff(pts, axis=0)
        return cls(pts, float(pairwise_sum(np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]))), addresses)

    def chord_sum(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _apply_j(c: int, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    (a, b), (c_, d) = j_matrix(c)
    return a * x + b * y, c_ * x + d * y


@lru_cache(maxsize=64)
def _side_chords(side: str, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Chord vectors ``J_v (q_b - q_a)`` for ``v in {a, b}**k`` in order along the side."""
    a, b = EdgeId((), side).corners
    d = Q[b - 1] - Q[a - 1]
    x, y = np.array([d[0]]), np.array([d[1]])
    for _ in range(k):
        xa, ya = _apply_j(a, x, y)
        xb, yb = _apply_j(b, x, y)
        x, y = np.concatenate([xa, xb]), np.concatenate([ya, yb])
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y


def _check_refinement(k: int) -> None:
    if not 0 <= k <= MAX_REFINEMENT:
        raise ValueError(f"refinement must lie in [0, {MAX_REFINEMENT}]")


def edge_chords(e: EdgeId, k: int) -> tuple[np.ndarray, np.ndarray]:
    _check_refinement(k)
    if len(e.cell) > MAX_WORD_LENGTH:
        raise ValueError("cell word too long")
    x, y = _side_chords(e.side, k)
    for c in reversed(e.cell):
        x, y = _apply_j(c, x, y)
    return x, y


def _sub_addresses(e: EdgeId, k: int) -> tuple[Address, ...]:
    a, b = e.corners
    out = []
    for t in range(2**k):
        v = tuple(b if bit == "1" else a for bit in format(t, f"0{k}b")) if k else ()
        out.append(Address(e.cell + v, a))
    last = out[-1].prefix
    out.append(Address(last, b))
    return tuple(out)


def edge_polyline_harmonic(e: EdgeId, k: int = DEFAULT_REFINEMENT, addresses: bool = False) -> Polyline:
    """Polyline through the Φ-images of the level-``(m + k)`` vertices on ``e``.

    Its length bounds the length of the curve ``Φ(e)`` from below and is
    nondecreasing in ``k``.
    """
    x, y = edge_chords(e, k)
    a, _ = e.corners
    start = phi(VertexId.canonical(e.cell, a))
    pts = np.empty((x.size + 1, 2))
    pts[0] = start
    pts[1:, 0] = start[0] + np.cumsum(x)
    pts[1:, 1] = start[1] + np.cumsum(y)
    length = float(pairwise_sum(np.sqrt(x * x + y * y)))
    return Polyline(pts, length, _sub_addresses(e, k) if addresses else None)


def edge_polyline_euclidean(e: EdgeId, k: int = 0) -> Polyline:
    maps = euclid_ifs()
    a, b = e.corners
    pa = apply_word(maps, e.cell, P[a - 1])
    pb = apply_word(maps, e.cell, P[b - 1])
    t = np.linspace(0.0, 1.0, 2**k + 1)[:, None]
    return Polyline((1 - t) * pa + t * pb, 0.5 ** len(e.cell))


def edge_polyline(geometry: str, e: EdgeId, k: int = DEFAULT_REFINEMENT) -> Polyline:
    if geometry == EUCLIDEAN:
        return edge_polyline_euclidean(e, k)
    if geometry == HARMONIC:
        return edge_polyline_harmonic(e, k)
    raise ValueError(f"unknown geometry {geometry!r}")


@lru_cache(maxsize=8)
def _harmonic_side_lengths(max_level: int, k: int) -> tuple[np.ndarray, ...]:
    bx, by = zip(*(_side_chords(s, k) for s in SIDES))
    out = [np.empty((3**m, 3)) for m in range(max_level + 1)]

    # Depth-first over words built by prepending letters: chords(c w) = J_c chords(w).
    stack = [((), np.stack(bx), np.stack(by))]
    while stack:
        w, x, y = stack.pop()
        out[len(w)][word_index(w)] = pairwise_sum(np.sqrt(x * x + y * y))
        if len(w) < max_level:
            for c in LETTERS:
                stack.append(((c,) + w, *_apply_j(c, x, y)))
    for arr in out:
        arr.setflags(write=False)
    return tuple(out)


def harmonic_side_lengths(max_level: int, k: int = DEFAULT_REFINEMENT) -> tuple[np.ndarray, ...]:
    """Harmonic edge lengths for all levels ``0..max_level`` at refinement ``k``.

    Entry ``[m][word_index(w), side_rank]`` is bit-identical to
    ``edge_polyline_harmonic(EdgeId(w, side), k).length``.
    """
    _check_refinement(k)
    return _harmonic_side_lengths(max_level, k)


def edge_length(geometry: str, e: EdgeId, k: int = DEFAULT_REFINEMENT) -> float:
    if geometry == EUCLIDEAN:
        return 0.5 ** len(e.cell)
    return edge_polyline_harmonic(e, k).length


# -- shortest paths -----------------------------------------------------------


def dijkstra(graph: LengthGraph, source: VertexId) -> np.ndarray:
    """Shortest-path distances from ``source`` to every vertex (in ``graph.vertex_list`` order)."""
    adj = graph.adjacency
    s = graph.index[graph.resolve(source)]
    dist = np.full(len(adj), np.inf)
    dist[s] = 0.0
    done = np.zeros(len(adj), dtype=bool)
    heap = [(0.0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, length, _ in adj[u]:
            nd = d + length
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    if not done.all():
        raise RuntimeError("length graph is disconnected")
    return dist


def all_pairs_distances(graph: LengthGraph) -> np.ndarray:
    return np.array([dijkstra(graph, v) for v in graph.vertex_list])


def geodesic_distance(p: VertexId, q: VertexId, graph: LengthGraph) -> float:
    p, q = graph.resolve(p), graph.resolve(q)
    return float(dijkstra(graph, p)[graph.index[q]])


@dataclass(frozen=True)
class GeodesicPath:
    edges: tuple[EdgeId, ...]
    start: VertexId
    end: VertexId
    length: float
    vertices: tuple[VertexId, ...]


def geodesic_path(p: VertexId, q: VertexId, graph: LengthGraph, rtol: float = 1e-12) -> GeodesicPath:
    """A shortest edge concatenation from ``p`` to ``q``.

    Among minimal paths the lexicographically smallest edge sequence is
    returned (edges compared by enumeration order), built greedily from ``p``.
    """
    p, q = graph.resolve(p), graph.resolve(q)
    dp = dijkstra(graph, p)
    iq = graph.index[q]
    dq = dijkstra(graph, q)
    total = dp[iq]
    tol = rtol * max(total, 1.0)
    names = graph.vertex_list
    u = graph.index[p]
    path, verts, length = [], [p], 0.0
    while u != iq:
        best = None
        for v, w, pos in graph.adjacency[u]:
            if abs(dp[u] + w - dp[v]) <= tol and abs(dp[v] + dq[v] - total) <= tol:
                key = graph.edges[pos][0].sort_key()
                if best is None or key < best[0]:
                    best = (key, v, w, pos)
        if best is None:
            raise RuntimeError("no tight edge found while tracing a geodesic")
        _, u, w, pos = best
        path.append(graph.edges[pos][0])
        verts.append(names[u])
        length += w
    return GeodesicPath(tuple(path), p, q, length, tuple(verts))


# -- path integrals against Kusuoka's Z ---------------------------------------

ZSampler = Callable[[Address], np.ndarray]


def kusuoka_sampler(depth: int) -> ZSampler:
    """Evaluate ``Z_depth`` at the first ``depth`` letters of an address."""

    def z(addr: Address) -> np.ndarray:
        return kusuoka_Zm(addr.truncate(depth))

    return z


def identity_sampler(addr: Address) -> np.ndarray:
    return np.eye(2)


def path_energy_integral(path: Polyline, z: ZSampler) -> float:
    """``sum_t <d_t, Z d_t>**0.5`` over forward differences ``d_t`` of the polyline.

    ``Z`` is sampled at the address of the starting point of each segment.
    """
    if path.addresses is None:
        raise ValueError("polyline carries no addresses for Z sampling")
    d = np.diff(path.points, axis=0)
    terms = np.empty(len(d))
    for t, dv in enumerate(d):
        quad = float(dv @ z(path.addresses[t]) @ dv)
        terms[t] = np.sqrt(max(quad, 0.0))
    return float(pairwise_sum(terms))


def tangent_projection_residual(
    e: EdgeId,
    index: int,
    depth: int,
    refinement: int = DEFAULT_REFINEMENT,
    z: ZSampler | None = None,
) -> float:
    """``|Z v - v| / |v|`` at an interior polyline vertex of the harmonic edge ``e``.

    ``v`` is the central difference of the refinement-``k`` polyline at vertex
    ``index`` (``0 < index < 2**k``); ``Z`` is taken along the address of that
    vertex as the end corner of the preceding sub-edge.
    """
    n = 2**refinement
    if not 0 < index < n:
        raise ValueError(f"index must be interior, i.e. in [1, {n - 1}]")
    line = edge_polyline_harmonic(e, refinement, addresses=True)
    v = line.points[index + 1] - line.points[index - 1]
    prefix = line.addresses[index - 1].prefix
    addr = Address(prefix, e.corners[1])
    Z = (z or kusuoka_sampler(depth))(addr)
    return float(np.linalg.norm(Z @ v - v) / np.linalg.norm(v))
