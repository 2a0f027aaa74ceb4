"""Harmonic functions, the harmonic coordinate map and Kusuoka's matrices/measure."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .gasket import (
    LETTERS,
    MAX_WORD_LENGTH,
    VertexId,
    Word,
    check_word,
    edges,
    j_matrix,
    to_m0,
    words,
)


def _cell_rule(c: int) -> np.ndarray:
    """Corner values of child cell ``c`` from the parent's corner values.

    Corner ``c`` is shared; a corner ``j != c`` sits at the midpoint of the
    parent side ``c j`` and takes ``(2 u_c + 2 u_j + u_k) / 5``.
    """
    A = np.zeros((3, 3))
    i = c - 1
    A[i, i] = 1.0
    for j in range(3):
        if j != i:
            k = 3 - i - j
            A[j, i], A[j, j], A[j, k] = 0.4, 0.4, 0.2
    return A


EXTENSION_RULES = np.array([_cell_rule(c) for c in LETTERS])


@dataclass(frozen=True)
class VertexFunction:
    level: int
    values: dict[VertexId, float]

    def __getitem__(self, v: VertexId) -> float:
        return self.values[v]

    def __len__(self) -> int:
        return len(self.values)


def _corner_values(boundary: np.ndarray, m: int) -> np.ndarray:
    """Corner values of every level-``m`` cell, shape ``(3**m, 3, ...)`` in word order."""
    U = boundary[None, ...]
    for _ in range(m):
        # child index = 3 * parent + (c - 1), matching lexicographic word order
        U = np.einsum("cij,pj...->pci...", EXTENSION_RULES, U)
        U = U.reshape((-1,) + boundary.shape)
    return U


def _extend(boundary: np.ndarray, m: int) -> dict[VertexId, np.ndarray]:
    U = _corner_values(boundary, m)
    out: dict[VertexId, np.ndarray] = {}
    for n, w in enumerate(words(m)):
        for c in LETTERS:
            v = VertexId.canonical(w, c)
            if v not in out:
                out[v] = U[n, c - 1]
    return out


def harmonic_extension(boundary: Sequence[float], m: int) -> VertexFunction:
    """Energy-minimizing extension of values on ``V_0`` to ``V_m``."""
    if m < 0:
        raise ValueError("level must be non-negative")
    b = np.asarray(boundary, dtype=float)
    if b.shape != (3,):
        raise ValueError("boundary must hold three values")
    return VertexFunction(m, {v: float(x) for v, x in _extend(b, m).items()})


def harmonic_extension_variational(boundary: Sequence[float], m: int) -> VertexFunction:
    """Same extension obtained by minimizing the level-``m`` graph energy directly.

    Solves the discrete Dirichlet problem on ``V_m`` with one dense linear
    solve; kept as an independent check of the per-cell rule.
    """
    b = np.asarray(boundary, dtype=float)
    ids: dict[VertexId, int] = {}
    pairs = []
    for e in edges(m):
        u, v = e.endpoints()
        for x in (u, v):
            ids.setdefault(x, len(ids))
        pairs.append((ids[u], ids[v]))
    n = len(ids)
    L = np.zeros((n, n))
    for i, j in pairs:
        L[i, i] += 1
        L[j, j] += 1
        L[i, j] -= 1
        L[j, i] -= 1
    fixed = np.array([ids[VertexId((), c)] for c in LETTERS])
    free = np.setdiff1d(np.arange(n), fixed)
    x = np.zeros(n)
    x[fixed] = b
    if free.size:
        x[free] = np.linalg.solve(L[np.ix_(free, free)], -L[np.ix_(free, fixed)] @ b)
    return VertexFunction(m, {v: float(x[i]) for v, i in ids.items()})


def graph_energy(u: VertexFunction, k: int) -> float:
    """Renormalized graph energy ``(5/3)**k * sum_{p~q in V_k} (u(p) - u(q))**2``."""
    if k > u.level:
        raise ValueError(f"function is only defined on V_{u.level}")
    total = 0.0
    for e in edges(k):
        a, b = e.endpoints()
        total += (u[a] - u[b]) ** 2
    return (5.0 / 3.0) ** k * total


def harmonic_basis_values(v: VertexId) -> np.ndarray:
    """``(h_1(v), h_2(v), h_3(v))`` by running the cell rule down the address of ``v``."""
    B = np.eye(3)
    for c in v.word:
        B = EXTENSION_RULES[c - 1] @ B
    return B[v.corner - 1]


def phi(v: VertexId, m: int | None = None) -> np.ndarray:
    """Harmonic coordinates of a vertex: ``(h(v) - 1/3) / sqrt(2)`` in ``M_0``."""
    if m is not None and v.level > m:
        raise ValueError(f"{v} is not a vertex of V_{m}")
    return to_m0(harmonic_basis_values(v) - 1.0 / 3.0) / np.sqrt(2.0)


@lru_cache(maxsize=16)
def _phi_table(m: int) -> dict[VertexId, tuple[float, float]]:
    ext = _extend(np.eye(3), m)
    return {v: tuple(to_m0(h - 1.0 / 3.0) / np.sqrt(2.0)) for v, h in ext.items()}


def phi_table(m: int) -> dict[VertexId, tuple[float, float]]:
    """Φ on every vertex of ``V_m`` (one vectorized extension of the three basis functions)."""
    return dict(_phi_table(m))


def _check_length(w: Word) -> Word:
    w = check_word(w)
    if len(w) > MAX_WORD_LENGTH:
        raise ValueError(f"words longer than {MAX_WORD_LENGTH} letters are not supported")
    return w


def jw(w: Sequence[int]) -> np.ndarray:
    """``J_{w_1} J_{w_2} ... J_{w_m}``; the identity for the empty word."""
    M = np.eye(2)
    for c in _check_length(tuple(w)):
        M = M @ j_matrix(c)
    return M


class DegenerateMatrix(FloatingPointError):
    pass


def kusuoka_Zm(w: Sequence[int]) -> np.ndarray:
    """Normalized Gram matrix ``J_w J_w^T / ||J_w||_HS^2`` of the word ``w``.

    Its image is the image of ``J_w``, so along an infinite address it tends
    to the projection onto the tangent direction of the harmonic gasket.
    """
    w = _check_length(tuple(w))
    if not w:
        raise ValueError("Z_m needs a word of length >= 1")
    M = jw(w)
    G = M @ M.T
    hs2 = np.trace(G)
    if not hs2 > np.finfo(float).tiny:
        raise DegenerateMatrix(f"||J_w||_HS underflows for |w| = {len(w)}")
    Z = G / hs2
    return 0.5 * (Z + Z.T)


def kusuoka_measure(w: Sequence[int]) -> float:
    """``nu(K_w) = (1/2) (5/3)**|w| ||J_w||_HS**2``."""
    w = _check_length(tuple(w))
    M = jw(w)
    return 0.5 * (5.0 / 3.0) ** len(w) * float(np.sum(M * M))


def kusuoka_random_word(length: int, rng: np.random.Generator) -> Word:
    """A word of the given length drawn from the Kusuoka measure.

    Letter ``i`` follows ``w`` with probability ``nu(K_wi) / nu(K_w)``; these
    sum to one by additivity.  Statements that hold ``nu``-almost everywhere
    (such as ``Z`` tending to a rank-one projection) are tested on such words.
    """
    if not 0 <= length <= MAX_WORD_LENGTH:
        raise ValueError(f"length must lie in [0, {MAX_WORD_LENGTH}]")
    M = np.eye(2)
    out = []
    for _ in range(length):
        children = [M @ j_matrix(c) for c in LETTERS]
        weights = np.array([np.sum(C * C) for C in children])
        k = int(rng.choice(3, p=weights / weights.sum()))
        out.append(LETTERS[k])
        M = children[k]
        M = M / np.sqrt(np.sum(M * M))  # only the direction matters; avoid underflow
    return tuple(out)


@dataclass(frozen=True)
class KusuokaState:
    word: Word
    J: np.ndarray
    Z: np.ndarray | None
    nu: float


def kusuoka_state(w: Sequence[int]) -> KusuokaState:
    w = _check_length(tuple(w))
    return KusuokaState(w, jw(w), kusuoka_Zm(w) if w else None, kusuoka_measure(w))
