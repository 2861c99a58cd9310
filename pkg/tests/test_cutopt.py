import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import lattice_circuit
from rqcbench.circuit import Circuit, CircuitVariant, Cut, Layer, generate_rqc
from rqcbench.cutopt import (
    CutReport,
    CutSearchError,
    brute_force_cut,
    count_formations,
    cutplan_report,
    min_L,
    monotone_cuts,
    search_optimal_cut,
    search_patterns,
)
from rqcbench.gates import Gate, ISwapLikeParams
from rqcbench.lattice import DEG45, DEG135, LatticeTopology, PatternSet, chains


def _pairs(n, pairs):
    """Circuit with one two-qubit gate per layer on the given pairs."""
    layers = [Layer("single", ())]
    for a, b in pairs:
        layers += [Layer("two", (Gate("ISwapLike", (a, b), ISwapLikeParams()),)), Layer("single", ())]
    return Circuit(n, tuple(layers), tuple((q, 0) for q in range(n)))


# ---- formation counts ------------------------------------------------------------------

def test_wedge():
    rep = count_formations(_pairs(3, [(0, 1), (0, 2)]), Cut.from_side([0], 3))
    assert rep == CutReport(2, 1, 0, 0)
    assert rep.L == 1


def test_same_pair_twice_is_not_a_wedge():
    rep = count_formations(_pairs(2, [(0, 1), (0, 1)]), Cut.from_side([0], 2))
    assert rep.g_wedge == 0
    assert rep.g_startend == 2


def test_dcd():
    rep = count_formations(_pairs(3, [(0, 1), (1, 2), (0, 1)]), Cut.from_side([0], 3))
    assert rep == CutReport(2, 0, 1, 0)


def test_dcd_needs_uncut_middle_gate():
    rep = count_formations(_pairs(3, [(0, 1), (1, 2), (0, 1)]), Cut.from_side([0, 2], 3))
    assert rep.g_dcd == 0


def test_lone_gate_is_start_and_end():
    rep = count_formations(_pairs(2, [(0, 1)]), Cut.from_side([0], 2))
    assert rep == CutReport(1, 0, 0, 1)
    assert rep.L == Fraction(1, 2)


def test_no_cross_gates():
    rep = count_formations(_pairs(4, [(0, 1), (2, 3), (0, 1)]), Cut.from_side([0, 1], 4))
    assert rep == CutReport(0, 0, 0, 0) and rep.L == 0


def test_L_identity_and_validation():
    rep = CutReport(10, 2, 1, 3)
    assert rep.L == Fraction(11, 2)
    assert rep.to_dict()["L"] == "11/2" and rep.to_dict()["L_float"] == 5.5
    with pytest.raises(ValueError):
        CutReport(1, 1, 1, 0)
    with pytest.raises(ValueError):
        CutReport(1, -1, 0, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 2**9 - 2))
def test_credits_bounded_by_cross_gates(seed, bits):
    c = lattice_circuit(3, 3, 6, seed)
    rep = count_formations(c, Cut.from_side([q for q in range(9) if bits >> q & 1], 9))
    assert rep.g_wedge + rep.g_dcd + rep.g_startend <= rep.g_cut
    assert 0 <= rep.L <= rep.g_cut


def test_patch_has_zero_cross_gates():
    full = lattice_circuit(4, 3, 10, 5)
    cut = search_optimal_cut(full, 2).cut
    patch = lattice_circuit(4, 3, 10, 5, CircuitVariant("patch", cut=cut))
    assert count_formations(patch, cut).g_cut == 0


# ---- cut search ----------------------------------------------------------------------------

def test_monotone_family_is_normalised():
    c = lattice_circuit(3, 3, 2, 0)
    fam = monotone_cuts(c)
    assert len(set(fam)) == len(fam)
    assert all(0 in s and 0 < len(s) < 9 for s in fam)


@pytest.mark.parametrize("rows, cols, m", [(2, 2, 4), (2, 3, 6), (3, 3, 8), (3, 4, 8)])
def test_exhaustive_matches_brute_force(rows, cols, m):
    c = lattice_circuit(rows, cols, m, 0)
    n = c.n_qubits
    for imb in (n % 2, 2, n):
        res = search_optimal_cut(c, imb)
        assert res.report.L == brute_force_cut(c, imb)[0]
        assert abs(res.cut.sizes[0] - res.cut.sizes[1]) <= imb
        assert count_formations(c, res.cut) == res.report


def test_heuristic_never_beats_exhaustive_and_is_seeded():
    c = lattice_circuit(3, 4, 8, 0)
    ex = search_optimal_cut(c, 12)
    h1 = search_optimal_cut(c, 12, "heuristic", seed=3)
    h2 = search_optimal_cut(c, 12, "heuristic", seed=3)
    assert h1.report.L >= ex.report.L
    assert h1.cut == h2.cut


def test_search_errors():
    c = lattice_circuit(3, 3, 2, 0)
    with pytest.raises(CutSearchError):
        search_optimal_cut(c, 0)
    with pytest.raises(ValueError):
        search_optimal_cut(c, 1, "annealing")


def test_search_result_unpacks():
    cut, rep = search_optimal_cut(lattice_circuit(2, 2, 4, 0), 0)
    assert isinstance(cut, Cut) and isinstance(rep, CutReport)


# ---- pattern search ------------------------------------------------------------------------------

def _brute_min_L(topo, p45, p135, m):
    c = generate_rqc(topo, PatternSet.from_phases(topo, p45, p135), m, 0)
    return brute_force_cut(c, c.n_qubits)[0]


@pytest.mark.parametrize("rows, cols, m", [(2, 2, 4), (2, 3, 6)])
def test_pattern_search_matches_brute_force(rows, cols, m):
    topo = LatticeTopology.staggered(rows, cols)
    k45, k135 = len(chains(topo, DEG45)), len(chains(topo, DEG135))
    best = max(
        _brute_min_L(topo, bits[:k45], bits[k45:], m)
        for bits in itertools.product((0, 1), repeat=k45 + k135)
    )
    res = search_patterns(topo, m)
    assert res.min_L == best
    assert res.patterns.validate(topo) == []


def test_searched_patterns_dominate_random_ones():
    topo = LatticeTopology.staggered(3, 3)
    res = search_patterns(topo, 8, max_partition_size=5)
    rng = np.random.default_rng(0)
    k45, k135 = len(chains(topo, DEG45)), len(chains(topo, DEG135))
    for _ in range(10):
        pats = PatternSet.from_phases(topo, rng.integers(0, 2, k45), rng.integers(0, 2, k135))
        assert min_L(topo, pats, 8, max_imbalance=1)[0] <= res.min_L


def test_fixed_phases_are_respected():
    topo = LatticeTopology.staggered(2, 3)
    res = search_patterns(topo, 6, fixed45={0: 1}, fixed135={1: 0})
    assert res.phases45[0] == 1 and res.phases135[1] == 0


def test_coordinate_ascent_path():
    topo = LatticeTopology.staggered(2, 3)
    res = search_patterns(topo, 6, max_exhaustive=1, restarts=2)
    assert res.min_L <= search_patterns(topo, 6).min_L


def test_partition_size_too_small():
    with pytest.raises(CutSearchError):
        search_patterns(LatticeTopology.staggered(2, 2), 2, max_partition_size=1)


# ---- report ---------------------------------------------------------------------------------------

def test_cutplan_report():
    c = lattice_circuit(3, 3, 8, 4)
    cut = search_optimal_cut(c, 1).cut
    rep = cutplan_report(c, cut, fidelity=0.01)
    assert rep["sizes"] == [5, 4]
    assert rep["path_count"] == int(np.prod(rep["ranks"]))
    assert rep["report"] == count_formations(c, cut).to_dict()
    assert {"paths", "seconds_per_path", "core_hours", "years"} <= set(rep["projected_sfa"])
