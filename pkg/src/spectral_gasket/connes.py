"""Connes' distance on graph approximations.

On a length graph the commutator condition ``||Df|| <= 1`` becomes one pair of
difference constraints per edge, ``|f(u) - f(v)| <= alpha_uv``.  Maximizing
``f(q) - f(p)`` under these constraints is the classic difference-constraint
system; its optimum is reached by the largest feasible potential with
``f(p) = 0``, which a label-correcting relaxation finds directly.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .gasket import BudgetExceeded, LengthGraph, VertexId
from .geodesics import all_pairs_distances, dijkstra
from .harmonic import VertexFunction

LP_ORACLE_MAX_VERTICES = 30


@dataclass(frozen=True)
class LipschitzProgram:
    graph: LengthGraph
    source: VertexId
    target: VertexId

    def __post_init__(self):
        object.__setattr__(self, "source", self.graph.resolve(self.source))
        object.__setattr__(self, "target", self.graph.resolve(self.target))

    def constraints(self) -> list[tuple[int, int, float]]:
        """``(i, j, c)`` meaning ``f_j - f_i <= c``; two per edge."""
        idx = self.graph.index
        out = []
        for _, length, (u, v) in self.graph.edges:
            out.append((idx[u], idx[v], length))
            out.append((idx[v], idx[u], length))
        return out

    def is_feasible(self, f: np.ndarray, atol: float = 1e-12) -> bool:
        return all(f[j] - f[i] <= c + atol for i, j, c in self.constraints())


def max_potential(program: LipschitzProgram) -> np.ndarray:
    """Largest ``f`` with ``f(source) = 0`` satisfying every edge constraint.

    FIFO label-correcting relaxation: start from ``+inf`` off the source and
    lower ``f_j`` to ``f_i + c`` whenever a constraint is violated.
    """
    g = program.graph
    n = len(g.vertices)
    s = g.index[program.source]
    f = np.full(n, np.inf)
    f[s] = 0.0
    queue = deque([s])
    queued = np.zeros(n, dtype=bool)
    queued[s] = True
    passes = 0
    while queue:
        i = queue.popleft()
        queued[i] = False
        passes += 1
        if passes > n * (len(g.edges) + 1):
            raise RuntimeError("difference constraints did not settle")
        for j, c, _ in g.adjacency[i]:
            if f[i] + c < f[j]:
                f[j] = f[i] + c
                if not queued[j]:
                    queue.append(j)
                    queued[j] = True
    return f


def connes_distance(p: VertexId, q: VertexId, graph: LengthGraph) -> float:
    """``sup {|f(p) - f(q)| : |f(u) - f(v)| <= alpha_uv on every edge}``."""
    program = LipschitzProgram(graph, p, q)
    if program.source == program.target:
        raise ValueError("source and target must differ")
    return float(max_potential(program)[graph.index[program.target]])


def connes_distance_lp(p: VertexId, q: VertexId, graph: LengthGraph) -> float:
    """The same supremum from a general-purpose LP solver (small graphs only)."""
    program = LipschitzProgram(graph, p, q)
    if program.source == program.target:
        return 0.0
    n = len(graph.vertices)
    if n > LP_ORACLE_MAX_VERTICES:
        raise BudgetExceeded(f"LP oracle limited to {LP_ORACLE_MAX_VERTICES} vertices, graph has {n}")
    cons = program.constraints()
    A = np.zeros((len(cons), n))
    rhs = np.empty(len(cons))
    for r, (i, j, c) in enumerate(cons):
        A[r, j], A[r, i], rhs[r] = 1.0, -1.0, c
    ip, iq = graph.index[program.source], graph.index[program.target]
    cost = np.zeros(n)
    cost[iq] = -1.0
    A_eq = np.zeros((1, n))
    A_eq[0, ip] = 1.0
    res = linprog(
        cost, A_ub=A, b_ub=rhs, A_eq=A_eq, b_eq=[0.0], bounds=[(None, None)] * n, method="highs"
    )
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return float(-res.fun)


def witness_function(p: VertexId, graph: LengthGraph) -> VertexFunction:
    """``h(x) = d(p, x)``; 1-Lipschitz on every edge and optimal for every target."""
    d = dijkstra(graph, p)
    return VertexFunction(graph.level, {v: float(d[i]) for i, v in enumerate(graph.vertex_list)})


def seminorm_equality_check(f: VertexFunction | dict, graph: LengthGraph) -> tuple[float, float]:
    """``(max over edges |df| / alpha, max over vertex pairs |df| / d)``."""
    values = f.values if isinstance(f, VertexFunction) else f
    x = np.array([values[v] for v in graph.vertex_list])
    idx = graph.index
    edge_sup = 0.0
    for _, length, (u, v) in graph.edges:
        edge_sup = max(edge_sup, abs(x[idx[u]] - x[idx[v]]) / length)
    D = all_pairs_distances(graph)
    iu = np.triu_indices(len(x), k=1)
    diffs = np.abs(x[:, None] - x[None, :])[iu]
    pairwise_sup = float(np.max(diffs / D[iu])) if diffs.size else 0.0
    return float(edge_sup), pairwise_sup
