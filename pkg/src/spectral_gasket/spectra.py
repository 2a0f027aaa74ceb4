"""Dirac spectra of the edge, cell and direct-sum triples and their dimensions.

Every curve of length ``alpha`` contributes the eigenvalues
``(2k + 1) pi / (2 alpha)``, ``k`` ranging over the integers.  Spectra are
materialized only below a cutoff and only for sources up to a maximal level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Protocol

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .gasket import (
    EUCLIDEAN,
    GEOMETRIES,
    HARMONIC,
    P,
    SIDE_CORNERS,
    BudgetExceeded,
    Word,
    edges,
    words,
)
from .geodesics import DEFAULT_REFINEMENT, edge_chords, harmonic_side_lengths

KINDS = ("edge", "cell", "sum")
MAX_EIGENVALUES = 5_000_000


class CellId(NamedTuple):
    cell: Word


class LevelLengths(Protocol):
    def level_lengths(self, m: int) -> np.ndarray: ...


@dataclass(frozen=True)
class LengthSequence:
    """Curve lengths feeding one of the triples, level by level.

    ``edge``: one source per cell side; ``cell``: one source per cell with the
    perimeter ``alpha_w = alpha_{w,l} + alpha_{w,r} + alpha_{w,b}``; ``sum``:
    both streams side by side.
    """

    geometry: str
    kind: str = "edge"
    max_level: int = 6
    refinement: int = DEFAULT_REFINEMENT

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.max_level < 0:
            raise ValueError("max_level must be non-negative")

    def side_lengths(self, m: int) -> np.ndarray:
        """Shape ``(3**m, 3)``: word order by rows, sides l, r, b by columns."""
        if self.geometry == EUCLIDEAN:
            return np.full((3**m, 3), 0.5**m)
        return harmonic_side_lengths(max(m, self.max_level), self.refinement)[m]

    def edge_lengths(self, m: int) -> np.ndarray:
        return self.side_lengths(m).ravel()

    def cell_lengths(self, m: int) -> np.ndarray:
        s = self.side_lengths(m)
        return (s[:, 0] + s[:, 1]) + s[:, 2]

    def level_lengths(self, m: int) -> np.ndarray:
        if self.kind == "edge":
            return self.edge_lengths(m)
        if self.kind == "cell":
            return self.cell_lengths(m)
        return np.concatenate([self.edge_lengths(m), self.cell_lengths(m)])

    def all_lengths(self) -> np.ndarray:
        return np.concatenate([self.level_lengths(m) for m in range(self.max_level + 1)])

    def sources(self) -> list:
        out: list = []
        for m in range(self.max_level + 1):
            if self.kind in ("edge", "sum"):
                tag = (lambda e: ("edge", e)) if self.kind == "sum" else (lambda e: e)
                out.extend(tag(e) for e in edges(m))
            if self.kind in ("cell", "sum"):
                tag = (lambda c: ("cell", c)) if self.kind == "sum" else (lambda c: c)
                out.extend(tag(CellId(w)) for w in words(m))
        return out

    def __iter__(self) -> Iterator[tuple[object, float]]:
        return iter(zip(self.sources(), self.all_lengths().tolist()))


def direct_sum(edge_seq: LengthSequence) -> LengthSequence:
    return LengthSequence(edge_seq.geometry, "sum", edge_seq.max_level, edge_seq.refinement)


def _eigen(k: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return (2 * k + 1) * math.pi / (2 * alpha)


def _positive_counts(alpha: np.ndarray, cutoff: float) -> np.ndarray:
    """Number of ``k >= 0`` with ``(2k+1) pi / (2 alpha) <= cutoff``, per source."""
    alpha = np.asarray(alpha, dtype=float)
    n = np.floor((2 * alpha * cutoff / math.pi + 1) / 2).astype(np.int64)
    n = np.maximum(n, 0)
    # The closed form can be off by one at the boundary; settle it with the
    # same floating-point expression that materialization uses.
    over = (n > 0) & (_eigen(n - 1, alpha) > cutoff)
    n[over] -= 1
    under = _eigen(n, alpha) <= cutoff
    n[under] += 1
    return n


@dataclass(frozen=True)
class DiracSpectrum:
    sequence: LengthSequence | None
    cutoff: float
    values: np.ndarray
    ks: np.ndarray
    source_index: np.ndarray
    sources: list = field(repr=False, default_factory=list)

    def __len__(self) -> int:
        return int(self.values.size)

    def tagged(self) -> Iterator[tuple[object, int, float]]:
        for i, k, lam in zip(self.source_index.tolist(), self.ks.tolist(), self.values.tolist()):
            yield self.sources[i], k, lam


def spectrum_of_lengths(alpha: np.ndarray, cutoff: float, max_count: int = MAX_EIGENVALUES) -> tuple:
    """``(values, ks, source_index)`` of all eigenvalues with ``|lambda| <= cutoff``."""
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    alpha = np.asarray(alpha, dtype=float)
    npos = _positive_counts(alpha, cutoff)
    total = int(2 * npos.sum())
    if total > max_count:
        raise BudgetExceeded(f"{total} eigenvalues exceed the budget of {max_count}")
    counts = 2 * npos
    src = np.repeat(np.arange(alpha.size), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    ks = np.arange(total) - starts - np.repeat(npos, counts)
    return _eigen(ks, alpha[src]), ks, src


def eigenvalues(seq: LengthSequence, cutoff: float, max_count: int = MAX_EIGENVALUES) -> DiracSpectrum:
    """All ``(source, k)`` pairs with ``|(2k+1) pi / (2 alpha)| <= cutoff``."""
    values, ks, src = spectrum_of_lengths(seq.all_lengths(), cutoff, max_count)
    return DiracSpectrum(seq, cutoff, values, ks, src, seq.sources())


def counting_function(seq: LengthSequence | np.ndarray, cutoff: float) -> int:
    """``#{lambda : |lambda| <= cutoff}`` without materializing the spectrum."""
    if cutoff <= 0:
        return 0
    alpha = seq.all_lengths() if isinstance(seq, LengthSequence) else np.asarray(seq, dtype=float)
    return int(2 * _positive_counts(alpha, cutoff).sum())


class ZetaPartial(NamedTuple):
    value: float
    p: float
    cutoff: float
    count: int


def zeta_partial(seq: LengthSequence | DiracSpectrum, p: float, cutoff: float | None = None) -> ZetaPartial:
    """``sum |lambda|**-p`` over the eigenvalues below the cutoff."""
    if not p > 0:
        raise ValueError("p must be positive")
    spectrum = seq if isinstance(seq, DiracSpectrum) else eigenvalues(seq, cutoff)
    vals = np.abs(spectrum.values)
    return ZetaPartial(float(np.sum(vals ** (-p))), p, spectrum.cutoff, len(spectrum))


# -- spectral dimension ---------------------------------------------------------


class SpectralDimensionError(RuntimeError):
    pass


@dataclass
class DimensionDiagnostics:
    levels: tuple[int, int]
    averaged_steps: list[int]
    step_roots: dict[int, float]
    bracket: tuple[float, float]
    raw_estimate: float
    clamped: bool

    @property
    def spread_last3(self) -> float:
        roots = [self.step_roots[m] for m in sorted(self.step_roots)][-3:]
        return float(max(roots) - min(roots)) if len(roots) == 3 else math.nan

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "averaged_steps": self.averaged_steps,
            "step_roots": {str(m): r for m, r in self.step_roots.items()},
            "bracket": list(self.bracket),
            "raw_estimate": self.raw_estimate,
            "clamped": self.clamped,
            "spread_last3": self.spread_last3,
        }


P_LOWER, P_UPPER = 1.0, 4.0


def spectral_dimension(seq: LevelLengths, levels: tuple[int, int], xtol: float = 1e-13):
    """Critical exponent of the level partition sums ``S_m(p) = sum alpha**p``.

    The growth rate ``log S_{m+1}(p) - log S_m(p)`` is averaged over the last
    half of the steps in ``levels`` and its zero in ``p`` is located by
    bracketing on ``(1, 4]``.  Returns ``(estimate, diagnostics)``; estimates
    below 1 are clamped to 1.
    """
    a, b = levels
    if b - a < 2 or a < 0:
        raise ValueError("need at least three consecutive levels")
    logl = {m: np.log(seq.level_lengths(m)) for m in range(a, b + 1)}

    def logS(m: int, p: float) -> float:
        return float(logsumexp(p * logl[m]))

    steps = list(range(a, b))
    used = steps[len(steps) // 2 :]

    def rate(p: float, ms) -> float:
        return sum(logS(m + 1, p) - logS(m, p) for m in ms) / len(ms)

    lo, hi = rate(P_LOWER, used), rate(P_UPPER, used)
    step_roots = {}
    for m in steps:
        g1, g4 = rate(P_LOWER, [m]), rate(P_UPPER, [m])
        if g1 > 0 > g4:
            step_roots[m] = brentq(lambda p: rate(p, [m]), P_LOWER, P_UPPER, xtol=xtol)
        else:
            step_roots[m] = math.nan
    if hi >= 0:
        raise SpectralDimensionError(f"growth rate still non-negative at p = {P_UPPER}")
    if lo <= 0:
        raw, clamped = P_LOWER, True
    else:
        raw = brentq(lambda p: rate(p, used), P_LOWER, P_UPPER, xtol=xtol)
        clamped = False
    diag = DimensionDiagnostics((a, b), used, step_roots, (lo, hi), raw, clamped)
    return max(raw, 1.0), diag


# -- commutators with linear functions -----------------------------------------


def commutator_bound_linear(
    a: float, b: float, geometry: str, level: int = 2, refinement: int = 8
) -> float:
    """``sup |d(f o r)/dtau|`` of ``f(x, y) = a x + b y`` over arclength-parameterized edges.

    Along an edge the derivative is the tangential component of ``(a, b)``;
    the supremum runs over every edge of levels ``0..level``, harmonic edges
    being resolved into polyline chords at the given refinement.
    """
    g = np.array([a, b], dtype=float)
    best = 0.0
    for m in range(level + 1):
        for e in edges(m):
            if geometry == EUCLIDEAN:
                i, j = SIDE_CORNERS[e.side]
                x, y = np.array([P[j - 1][0] - P[i - 1][0]]), np.array([P[j - 1][1] - P[i - 1][1]])
            elif geometry == HARMONIC:
                x, y = edge_chords(e, refinement)
            else:
                raise ValueError(f"unknown geometry {geometry!r}")
            norm = np.sqrt(x * x + y * y)
            best = max(best, float(np.max(np.abs(g[0] * x + g[1] * y) / norm)))
    if best > abs(a) + abs(b) + 1e-12:
        raise RuntimeError("commutator estimate exceeds |a| + |b|")
    return best
