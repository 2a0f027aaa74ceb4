import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gasket.gasket import EUCLIDEAN, HARMONIC, edges, words
from spectral_gasket.spectra import (
    CellId,
    LengthSequence,
    SpectralDimensionError,
    commutator_bound_linear,
    counting_function,
    direct_sum,
    eigenvalues,
    spectral_dimension,
    spectrum_of_lengths,
    zeta_partial,
)
from spectral_gasket.gasket import BudgetExceeded, build_length_graph

LOG3_LOG2 = math.log(3) / math.log(2)
alphas_st = st.lists(st.floats(0.01, 3.0), min_size=1, max_size=12)


class Toy:
    """``n`` copies of ``r**m`` at level ``m``."""

    def __init__(self, n, r):
        self.n, self.r = n, r

    def level_lengths(self, m):
        return np.full(self.n**m, self.r**m)


def _brute_spectrum(alphas, cutoff):
    out = []
    for a in alphas:
        k = 0
        while (2 * k + 1) * math.pi / (2 * a) <= cutoff:
            lam = (2 * k + 1) * math.pi / (2 * a)
            out += [lam, -lam]
            k += 1
    return sorted(out)


# -- eigenvalues ---------------------------------------------------------------------


def test_single_edge_examples():
    vals, ks, src = spectrum_of_lengths(np.array([1.0]), 10.0)
    expected = [s * n * math.pi / 2 for n in (1, 3, 5) for s in (1, -1)]
    assert sorted(vals) == pytest.approx(sorted(expected), abs=1e-15)
    assert sorted(ks) == [-3, -2, -1, 0, 1, 2]
    assert len(spectrum_of_lengths(np.array([1.0]), math.pi / 2 - 1e-9)[0]) == 0


def test_euclidean_level1_union():
    # 3 edges of length 1 give 6 each; 9 edges of length 1/2 give +-pi, +-3pi each
    spectrum = eigenvalues(LengthSequence(EUCLIDEAN, "edge", max_level=1), 10.0)
    assert len(spectrum) == 3 * 6 + 9 * 4
    assert sorted(spectrum.values) == pytest.approx(_brute_spectrum([1.0] * 3 + [0.5] * 9, 10.0), abs=1e-14)
    per_source = Counter(src for src, _, _ in spectrum.tagged())
    assert all(per_source[e] == (6 if e.level == 0 else 4) for e in per_source)


@given(alphas_st, st.floats(0.1, 60))
def test_materialization_matches_brute_force(alphas, cutoff):
    vals, ks, src = spectrum_of_lengths(np.array(alphas), cutoff)
    assert sorted(vals.tolist()) == _brute_spectrum(alphas, cutoff)
    assert np.all(np.abs(vals) <= cutoff)


@given(alphas_st, st.floats(0.1, 60))
def test_spectrum_symmetric_and_zero_free(alphas, cutoff):
    vals, ks, _ = spectrum_of_lengths(np.array(alphas), cutoff)
    assert Counter(vals.tolist()) == Counter((-vals).tolist())
    assert np.all(vals != 0)
    assert Counter(ks.tolist()) == Counter((-ks - 1).tolist())


def test_tags_and_sources():
    seq = LengthSequence(HARMONIC, "sum", max_level=1)
    spectrum = eigenvalues(seq, 20.0)
    tags = {tag for tag, _, _ in spectrum.tagged()}
    assert ("edge", next(iter(edges(0)))) in tags
    assert ("cell", CellId(())) in tags
    assert len(seq.sources()) == seq.all_lengths().size == (3 + 9) + (1 + 3)


def test_budget():
    with pytest.raises(BudgetExceeded):
        eigenvalues(LengthSequence(EUCLIDEAN, "edge", max_level=3), 1e5, max_count=1000)
    with pytest.raises(ValueError):
        eigenvalues(LengthSequence(EUCLIDEAN, "edge", max_level=1), 0.0)


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
def test_minimum_gap(geometry):
    seq = LengthSequence(geometry, "edge", max_level=3)
    spectrum = eigenvalues(seq, 50.0)
    assert np.min(np.abs(spectrum.values)) == math.pi / (2 * seq.all_lengths().max())


@pytest.mark.parametrize("geometry", [EUCLIDEAN, HARMONIC])
def test_direct_sum_is_union(geometry):
    edge = LengthSequence(geometry, "edge", max_level=3)
    cell = LengthSequence(geometry, "cell", max_level=3)
    total = eigenvalues(direct_sum(edge), 60.0)
    union = Counter(eigenvalues(edge, 60.0).values.tolist()) + Counter(eigenvalues(cell, 60.0).values.tolist())
    assert Counter(total.values.tolist()) == union


# -- counting ------------------------------------------------------------------------


def test_counting_matches_enumeration_seeded():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        geometry = [EUCLIDEAN, HARMONIC][rng.integers(2)]
        kind = ["edge", "cell", "sum"][rng.integers(3)]
        seq = LengthSequence(geometry, kind, max_level=int(rng.integers(0, 5)))
        cutoff = float(rng.uniform(0.5, 80))
        assert counting_function(seq, cutoff) == len(eigenvalues(seq, cutoff))


@given(alphas_st, st.floats(1e-3, 100))
def test_counting_closed_form(alphas, cutoff):
    assert counting_function(np.array(alphas), cutoff) == len(_brute_spectrum(alphas, cutoff))


def test_counting_at_zero():
    seq = LengthSequence(EUCLIDEAN, "edge", max_level=2)
    assert counting_function(seq, 1e-12) == 0
    assert counting_function(seq, 0.0) == 0


def test_counting_exact_boundary():
    # lambda = pi/2 exactly at the cutoff is included
    assert counting_function(np.array([1.0]), math.pi / 2) == 2


@given(alphas_st, st.floats(0.1, 100))
def test_doubling_lengths_doubles_counts(alphas, cutoff):
    a = np.array(alphas)
    pos1 = counting_function(a, cutoff) // 2
    pos2 = counting_function(2 * a, cutoff) // 2
    assert abs(pos2 - 2 * pos1) <= len(alphas)
    for x in alphas:
        n1 = counting_function(np.array([x]), cutoff) // 2
        n2 = counting_function(np.array([2 * x]), cutoff) // 2
        assert abs(n2 - 2 * n1) <= 1


# -- zeta ----------------------------------------------------------------------------


def test_zeta_single_edge_p2():
    # sum over all k of (2 / ((2k+1) pi))**2 = 2 * (4 / pi**2) * (pi**2 / 8) = 1
    seq = LengthSequence(EUCLIDEAN, "edge", max_level=0)
    alpha1 = np.array([1.0])
    vals, _, _ = spectrum_of_lengths(alpha1, 2e4)
    z = zeta_partial(eigenvalues(seq, 2e4), 2.0)
    oracle = math.fsum(3 * (2 / ((2 * k + 1) * math.pi)) ** 2 * 2 for k in range(len(vals) // 2))
    assert z.value == pytest.approx(oracle, rel=1e-12)
    assert z.value == pytest.approx(3.0, abs=1e-4)
    assert z.cutoff == 2e4 and z.p == 2.0


def test_zeta_empty_and_monotone():
    seq = LengthSequence(HARMONIC, "cell", max_level=2)
    assert zeta_partial(seq, 1.5, 0.1).value == 0
    values = [zeta_partial(seq, 1.5, c).value for c in (1, 5, 10, 40, 100)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        zeta_partial(seq, 0.0, 10)


# -- lengths -------------------------------------------------------------------------


def test_cell_identity_exact():
    seq = LengthSequence(HARMONIC, "cell", max_level=6)
    for m in range(7):
        s = seq.side_lengths(m)
        for n, w in enumerate(words(m)):
            assert seq.cell_lengths(m)[n] - (s[n, 0] + s[n, 1] + s[n, 2]) == 0


def test_edge_lengths_match_graph(graph):
    seq = LengthSequence(HARMONIC, "edge", max_level=3)
    for m in range(4):
        assert np.array_equal(seq.edge_lengths(m), graph(HARMONIC, m).lengths)
    assert np.all(LengthSequence(EUCLIDEAN, "edge", max_level=2).edge_lengths(2) == 0.25)


def test_sequence_validation():
    for bad in [("flat", "edge"), (EUCLIDEAN, "face")]:
        with pytest.raises(ValueError):
            LengthSequence(*bad)


def test_iteration_order():
    items = list(LengthSequence(EUCLIDEAN, "edge", max_level=1))
    assert [str(src) for src, _ in items[:4]] == ["0/l", "0/r", "0/b", "1/l"]
    assert [a for _, a in items] == [1.0] * 3 + [0.5] * 9


# -- spectral dimension --------------------------------------------------------------


def test_euclidean_dimension():
    est, diag = spectral_dimension(LengthSequence(EUCLIDEAN, "edge", max_level=10), (1, 10))
    assert abs(est - LOG3_LOG2) < 1e-3
    assert abs(est - LOG3_LOG2) < 1e-10
    assert not diag.clamped and diag.spread_last3 < 1e-10


@pytest.mark.parametrize("n,r", [(3, 0.5), (2, 0.5), (5, 0.3), (4, 1 / 3)])
def test_toy_dimension(n, r):
    est, _ = spectral_dimension(Toy(n, r), (1, 8))
    assert est == pytest.approx(max(math.log(n) / math.log(1 / r), 1.0), abs=1e-6)


def test_dimension_clamped_below_one():
    est, diag = spectral_dimension(Toy(2, 0.25), (1, 6))
    assert est == 1.0 and diag.clamped


def test_dimension_fails_without_sign_change():
    with pytest.raises(SpectralDimensionError):
        spectral_dimension(Toy(100, 0.9), (0, 2))
    with pytest.raises(ValueError):
        spectral_dimension(Toy(3, 0.5), (1, 2))


def test_harmonic_edge_and_cell_dimensions_agree():
    e, de = spectral_dimension(LengthSequence(HARMONIC, "edge", max_level=8), (1, 8))
    c, dc = spectral_dimension(LengthSequence(HARMONIC, "cell", max_level=8), (1, 8))
    s, _ = spectral_dimension(LengthSequence(HARMONIC, "sum", max_level=8), (1, 8))
    assert abs(e - c) < 1e-2
    assert 1 < e < 2 and 1 < c < 2 and 1 < s < 2
    assert de.as_dict()["spread_last3"] == de.spread_last3


def test_euclidean_kinds_agree():
    for kind in ("cell", "sum"):
        est, _ = spectral_dimension(LengthSequence(EUCLIDEAN, kind, max_level=8), (1, 8))
        assert est == pytest.approx(LOG3_LOG2, abs=1e-9)


# -- commutators ---------------------------------------------------------------------


def test_commutator_examples():
    # Euclidean edge directions are 0, 60 and 120 degrees: |cos| peaks at 1 on bottom edges
    assert commutator_bound_linear(1, 0, EUCLIDEAN) == pytest.approx(1.0, abs=1e-15)
    assert commutator_bound_linear(0, 1, EUCLIDEAN) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert commutator_bound_linear(0, 0, EUCLIDEAN) == 0
    assert commutator_bound_linear(0, 0, HARMONIC) == 0
    for geometry in (EUCLIDEAN, HARMONIC):
        assert commutator_bound_linear(1, 1, geometry) <= 2 + 1e-9


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_commutator_bounded_by_gradient(a, b):
    v = commutator_bound_linear(a, b, HARMONIC, level=1, refinement=5)
    assert v <= math.hypot(a, b) + 1e-12 <= abs(a) + abs(b) + 1e-12


def test_commutator_harmonic_sees_every_direction():
    # harmonic edges turn through all directions, so the sup approaches |(a, b)|
    v = commutator_bound_linear(0.3, -0.8, HARMONIC, level=2, refinement=8)
    assert v == pytest.approx(math.hypot(0.3, -0.8), rel=1e-3)


def test_graph_and_sequence_agree_on_euclidean():
    g = build_length_graph(EUCLIDEAN, 2)
    assert np.array_equal(g.lengths, LengthSequence(EUCLIDEAN, "edge", max_level=2).edge_lengths(2))
