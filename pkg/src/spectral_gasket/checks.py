"""Invariant suite run by ``spectral-gasket validate``.

Each check measures one quantity and compares it with a fixed threshold.  The
suite is sized for a few seconds of work; the levels it touches are capped
independently of the level requested on the command line.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .connes import connes_distance, seminorm_equality_check, witness_function
from .gasket import (
    EUCLIDEAN,
    GEOMETRIES,
    HARMONIC,
    LETTERS,
    VertexId,
    apply_word,
    build_length_graph,
    edge_count,
    edges,
    harmonic_ifs,
    vertex_count,
    words,
)
from .geodesics import edge_polyline_harmonic, geodesic_distance
from .harmonic import (
    graph_energy,
    harmonic_extension,
    kusuoka_measure,
    kusuoka_random_word,
    kusuoka_Zm,
    phi_table,
)
from .spectra import LengthSequence, eigenvalues


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "detail": self.detail,
        }


def _below(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, float(value), threshold, bool(value < threshold), detail)


def _exact(name: str, value: float, detail: str = "exact") -> CheckResult:
    return CheckResult(name, float(value), 0.0, bool(value == 0.0), detail)


# -- measurements shared with the command line ---------------------------------


def conjugacy_error(m: int) -> float:
    """``max |Φ(F_i v) - H_i(Φ(v))|`` over ``v`` in ``V_m`` and ``i`` in 1..3."""
    fine = phi_table(m + 1)
    coarse = phi_table(m)
    H = harmonic_ifs()
    worst = 0.0
    for v, x in coarse.items():
        for i in LETTERS:
            fv = VertexId.canonical((i,) + v.word, v.corner)
            worst = max(worst, float(np.linalg.norm(np.subtract(fine[fv], H[i - 1](x)))))
    return worst


def word_conjugacy_error(max_len: int) -> float:
    """``max |Φ(F_w(p_c)) - H_w(q_c)|`` over ``|w| <= max_len`` with ``H_w`` composed map by map."""
    H = harmonic_ifs()
    table = phi_table(max_len)
    q = [table[VertexId((), c)] for c in LETTERS]
    worst = 0.0
    for m in range(max_len + 1):
        for w in words(m):
            for c in LETTERS:
                y = apply_word(H, w, q[c - 1])
                worst = max(worst, float(np.linalg.norm(y - table[VertexId.canonical(w, c)])))
    return worst


def energy_drift(max_level: int) -> float:
    """Largest deviation from the level-0 energy among the three basis extensions."""
    worst = 0.0
    for b in np.eye(3):
        u = harmonic_extension(b, max_level)
        e = [graph_energy(u, k) for k in range(max_level + 1)]
        worst = max(worst, max(abs(x - e[0]) for x in e))
    return worst


def measure_additivity_residual(max_len: int) -> float:
    """``max |nu(K_w) - sum_i nu(K_wi)|`` over ``|w| <= max_len``."""
    worst = 0.0
    for m in range(max_len + 1):
        for w in words(m):
            parts = sum(kusuoka_measure(w + (i,)) for i in LETTERS)
            worst = max(worst, abs(kusuoka_measure(w) - parts))
    return worst


def random_prefixes(count: int, depth: int, seed: int) -> list[tuple[int, ...]]:
    """``count`` words of length ``depth`` drawn from the Kusuoka measure."""
    rng = np.random.default_rng(seed)
    return [kusuoka_random_word(depth, rng) for _ in range(count)]


def z_trace_error(prefixes, depth: int) -> float:
    worst = 0.0
    for w in prefixes:
        for d in range(1, depth + 1):
            worst = max(worst, abs(np.trace(kusuoka_Zm(w[:d])) - 1.0))
    return worst


def z_small_eigen_decrease(prefixes, shallow: int = 5, deep: int = 20) -> int:
    """How many prefixes have a smaller least eigenvalue of ``Z`` at ``deep`` than at ``shallow``."""
    hits = 0
    for w in prefixes:
        lo5 = np.linalg.eigvalsh(kusuoka_Zm(w[:shallow]))[0]
        lo20 = np.linalg.eigvalsh(kusuoka_Zm(w[:deep]))[0]
        hits += lo20 < lo5
    return hits


def z_address_disagreement(vertices, depth: int = 20) -> float:
    """``max ||Z_depth(a) - Z_depth(b)||`` over the two infinite addresses of each junction vertex."""
    worst = 0.0
    for v in vertices:
        a, b = v.addresses()
        za = kusuoka_Zm((a.word + (a.corner,) * depth)[:depth])
        zb = kusuoka_Zm((b.word + (b.corner,) * depth)[:depth])
        worst = max(worst, float(np.max(np.abs(za - zb))))
    return worst


def harmonic_additivity_defect(max_level: int, k: int) -> float:
    """``max |L_k+1(e) - L_k(e_a) - L_k(e_b)|`` over edges of levels ``<= max_level``; zero when exact."""
    worst = 0.0
    for m in range(max_level + 1):
        for e in edges(m):
            a, b = e.children()
            parent = edge_polyline_harmonic(e, k + 1).length
            worst = max(worst, abs(parent - (edge_polyline_harmonic(a, k).length + edge_polyline_harmonic(b, k).length)))
    return worst


def duality_defect(geometry: str, level: int, pairs: int | None, seed: int) -> float:
    """Largest relative gap between Connes and geodesic distance over vertex pairs.

    ``pairs=None`` scans all pairs, otherwise a seeded sample of that size.
    """
    g = build_length_graph(geometry, level)
    vs = g.vertex_list
    if pairs is None:
        todo = list(itertools.combinations(vs, 2))
    else:
        rng = random.Random(seed)
        todo = [tuple(rng.sample(vs, 2)) for _ in range(pairs)]
    worst = 0.0
    for p, q in todo:
        c, d = connes_distance(p, q, g), geodesic_distance(p, q, g)
        worst = max(worst, abs(c - d) / d)
    return worst


# -- the suite --------------------------------------------------------------------


def run_checks(level: int = 3, seed: int = 0, refinement: int = 12) -> list[CheckResult]:
    level = max(0, min(level, 4))
    out: list[CheckResult] = []

    def guarded(name: str, fn: Callable[[], CheckResult]) -> None:
        try:
            out.append(fn())
        except Exception as exc:  # a crashing check is a failed check
            out.append(CheckResult(name, float("nan"), 0.0, False, f"{type(exc).__name__}: {exc}"))

    def counts() -> CheckResult:
        bad = 0
        for m in range(level + 1):
            g = build_length_graph(EUCLIDEAN, m)
            bad += len(g.vertices) != vertex_count(m) or len(g.edges) != edge_count(m)
        return _below("graph counts", bad, 1, f"levels 0..{level}")

    def addressing() -> CheckResult:
        names: dict[VertexId, set] = {}
        for w in words(level):
            for c in LETTERS:
                names.setdefault(VertexId.canonical(w, c), set()).add((w, c))
        bad = sum(len(s) != (1 if not v.word else 2) for v, s in names.items())
        return _below("addressing", bad, 1, "two names per junction, one per boundary corner")

    guarded("graph counts", counts)
    guarded("addressing", addressing)
    guarded("conjugacy", lambda: _below("conjugacy", conjugacy_error(6), 1e-10, "V_6"))
    guarded("energy conservation", lambda: _below("energy conservation", energy_drift(6), 1e-10, "levels 0..6"))
    guarded(
        "measure additivity",
        lambda: _below("measure additivity", measure_additivity_residual(6), 1e-12, "|w| <= 6"),
    )
    prefixes = random_prefixes(30, 20, seed)
    guarded("Z trace", lambda: _below("Z trace", z_trace_error(prefixes, 20), 1e-12, "30 prefixes, depth 20"))
    guarded(
        "Z rank-one trend",
        lambda: _below("Z rank-one trend", len(prefixes) - z_small_eigen_decrease(prefixes), 0.05 * len(prefixes) + 1),
    )
    junctions = [v for v in phi_table(3) if v.word]
    guarded(
        "Z address agreement",
        lambda: _below("Z address agreement", z_address_disagreement(junctions), 1e-8, "V_3 junctions, depth 20"),
    )
    guarded(
        "harmonic additivity",
        lambda: _exact("harmonic additivity", harmonic_additivity_defect(1, refinement - 1)),
    )

    def cell_identity() -> CheckResult:
        seq = LengthSequence(HARMONIC, "cell", max_level=level, refinement=refinement)
        worst = 0.0
        for m in range(level + 1):
            s = seq.side_lengths(m)
            worst = max(worst, float(np.max(np.abs(seq.cell_lengths(m) - (s[:, 0] + s[:, 1] + s[:, 2])))))
        return _exact("cell length identity", worst)

    guarded("cell length identity", cell_identity)

    def symmetry() -> CheckResult:
        spectrum = eigenvalues(LengthSequence(HARMONIC, "sum", max_level=level, refinement=refinement), 40.0)
        v = np.sort(spectrum.values)
        return _exact("spectrum symmetry", float(np.max(np.abs(v + v[::-1]), initial=0.0)))

    guarded("spectrum symmetry", symmetry)
    for geometry in GEOMETRIES:
        name = f"duality {geometry}"
        guarded(
            name,
            lambda geometry=geometry, name=name: _below(
                name, duality_defect(geometry, level, None if level <= 2 else 200, seed), 1e-9, f"level {level}"
            ),
        )

    def seminorm() -> CheckResult:
        g = build_length_graph(HARMONIC, min(level, 3))
        edge_sup, pair_sup = seminorm_equality_check(witness_function(g.vertex_list[0], g), g)
        return _below("seminorm equality", abs(edge_sup - pair_sup) + abs(edge_sup - 1.0), 1e-9)

    guarded("seminorm equality", seminorm)
    return out
