import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import lattice_circuit
from rqcbench.cost import (
    DEFAULT,
    SECONDS_PER_DAY,
    SECONDS_PER_YEAR,
    CostConstants,
    CostError,
    advantage_region,
    calendar_years,
    circuit_fidelity,
    gate_counts,
    imbalanced_speedup,
    imbalanced_weights,
    max_sa_qubits,
    sfa_core_hours,
    sfa_memory_per_path,
    sfa_time,
    summit_extrapolate,
    t_quantum,
    t_sa,
    t_sfa,
    table_s3,
    tn_cost_scaling,
    top_paths_needed,
)

E1, E2, ER = 0.0014, 0.0059, 0.0452


# ---- constants --------------------------------------------------------------------------

def test_default_constants():
    assert DEFAULT.C_SA == pytest.approx(1.5e13)
    assert DEFAULT.C_SFA == pytest.approx(3.3e15)
    assert DEFAULT.C_QC == pytest.approx(1e6 / 230)
    assert SECONDS_PER_YEAR == 8766 * 3600
    with pytest.raises(CostError):
        CostConstants(B=0)


# ---- Schroedinger -------------------------------------------------------------------------

def test_t_sa_arithmetic():
    assert t_sa(10, 5, CostConstants(C_SA=1e9)).seconds == pytest.approx(5.12e-5)
    assert t_sa(30, 40).seconds == pytest.approx(2 * t_sa(30, 20).seconds)


def test_sa_memory_limit():
    # 2^(n+1) bytes: with 3e15 bytes the largest n is 50
    assert max_sa_qubits() == 50
    assert t_sa(50, 20).feasible and not t_sa(51, 20).feasible
    assert max_sa_qubits(CostConstants(memory_bytes=2.0**52)) == 51


@given(st.integers(1, 60), st.integers(1, 40))
def test_t_sa_monotone(n, m):
    assert t_sa(n + 1, m).seconds > t_sa(n, m).seconds
    assert t_sa(n, m + 1).seconds > t_sa(n, m).seconds


# ---- Schroedinger-Feynman -----------------------------------------------------------------

def test_sfa_formula_p2():
    n, m, F = 56, 20, 6.62e-4
    # k = 1 at p = 2
    ref = 2 ** (2 * 0.24 * m * math.sqrt(n)) * F * (2 * 2**28 + F**-2) / 3.3e15
    assert sfa_time(n, m, F, 2) == pytest.approx(ref, rel=1e-12)
    assert t_sfa(n, m, F, 2).seconds == pytest.approx(4.57e11, rel=1e-3)
    assert sfa_memory_per_path(56, 2) == 4 * 2**28


def test_sfa_optimal_p():
    best = t_sfa(56, 20, 6.62e-4)
    assert best.feasible
    for p in range(2, 57):
        o = t_sfa(56, 20, 6.62e-4, p)
        if o.feasible:
            assert best.seconds <= o.seconds


def test_sfa_huge_time_is_inf():
    assert sfa_time(400, 40, 0.5, 40) == math.inf


@settings(max_examples=30, deadline=None)
@given(st.integers(10, 70), st.integers(4, 30), st.floats(1e-6, 1), st.floats(1e9, 1e18))
def test_more_memory_never_slower(n, m, F, mem):
    small = t_sfa(n, m, F, c=CostConstants(memory_bytes=mem))
    big = t_sfa(n, m, F, c=CostConstants(memory_bytes=mem * 10))
    if small.feasible:
        assert big.seconds <= small.seconds


def test_sfa_errors():
    with pytest.raises(CostError):
        t_sfa(56, 20, 0.0)
    with pytest.raises(CostError):
        t_sfa(56, 20, 0.1, p=1)


# ---- quantum -----------------------------------------------------------------------------------

def test_t_quantum():
    assert t_quantum(1.0) == pytest.approx(230e-6)
    assert t_quantum(6.62e-4) == pytest.approx(524.8, rel=1e-3)


@given(st.floats(1e-6, 0.99))
def test_t_quantum_decreasing(F):
    assert t_quantum(F * 1.01) < t_quantum(F)


# ---- core hours --------------------------------------------------------------------------------

def test_balanced_core_hours():
    h = sfa_core_hours(4**34 * 2, 6.62e-4, 19560, 2)
    assert h == pytest.approx(1.06e18, rel=0.005)
    assert calendar_years(1.06e18) == pytest.approx(1.59e7, rel=0.005)
    assert calendar_years(8.9e13) == pytest.approx(1332, rel=0.002)


def test_table_rows_within_one_percent():
    rows = table_s3()
    assert [r.n for r in rows] == [53, 56, 56]
    for r in rows:
        assert r.relative_error < 0.01


def test_core_hours_validation():
    with pytest.raises(CostError):
        sfa_core_hours(0, 0.1, 1)


# ---- imbalanced gates ---------------------------------------------------------------------------

def _brute_top_paths(weights, g, F):
    w = sorted((math.prod(c) for c in itertools.product(weights, repeat=g)), reverse=True)
    s = np.cumsum(w)
    return int(np.searchsorted(s, F * 4**g * (1 - 1e-12))) + 1


def test_contrived_weights_need_one_path():
    # the heaviest path has weight 4 out of 16
    assert top_paths_needed([2, 1, 1, 0], 2, 0.25) == 1
    # 4 + 2 covers 0.26 * 16
    assert top_paths_needed([2, 1, 1, 0], 2, 0.26) == 2
    assert top_paths_needed([2, 1, 1, 0], 2, 0.25) == _brute_top_paths([2, 1, 1, 0], 2, 0.25)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 3), min_size=4, max_size=4), st.integers(1, 5), st.floats(0.01, 1))
def test_top_paths_against_enumeration(raw, g, F):
    w = np.array(raw)
    if w.sum() < 1e-3:
        return
    w = 4 * w / w.sum()
    assert top_paths_needed(w, g, F) == _brute_top_paths(w, g, F)


def test_balanced_speedup_is_one():
    assert imbalanced_speedup(0.0, 0.0, 10, 0.01) == 1.0
    assert imbalanced_speedup(0.0, 0.0, 1, 0.125) == 1.0
    assert np.allclose(imbalanced_weights(0.0, 0.0), 1.0)


def test_device_setting_speedup_is_small():
    s = imbalanced_speedup(0.036, math.pi / 6, 42, 6.62e-4)
    assert 1 < s < 10
    assert s == pytest.approx(3.118, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(0, math.pi), st.integers(1, 30), st.floats(1e-4, 1))
def test_speedup_at_least_one(dt, phi, g, F):
    assert imbalanced_speedup(dt, phi, g, F) >= 1 - 1e-9


# ---- tensor networks ------------------------------------------------------------------------------

def test_tn_examples():
    big = tn_cost_scaling(1.65e20, 1.9e7, 6.62e-4)
    assert big == pytest.approx(2.08e24, rel=0.01)
    assert summit_extrapolate(big) / SECONDS_PER_YEAR == pytest.approx(8.24, rel=0.01)
    small = tn_cost_scaling(1.63e18, 3e6, 2.24e-3)
    assert small == pytest.approx(1.10e22, rel=0.01)
    assert summit_extrapolate(small) / SECONDS_PER_DAY == pytest.approx(15.9, rel=0.01)
    assert tn_cost_scaling(7.0, 1, 1) == 7.0


# ---- advantage region -------------------------------------------------------------------------------

def test_gate_counts_match_generated_circuit():
    c = lattice_circuit(2, 6, 10, 0)
    n1 = sum(g.arity == 1 for _, _, g in c.gates())
    n2 = sum(g.arity == 2 for _, _, g in c.gates())
    assert gate_counts(12, 10) == (n1, n2)


def test_circuit_fidelity_zero_errors():
    assert circuit_fidelity(30, 10, 0, 0, 0) == 1.0


def test_small_devices_are_classical():
    grid = advantage_region(range(4, 21, 4), range(4, 25, 4), E1, E2, ER)
    assert not grid.quantum_cells()


def test_noiseless_devices_become_quantum():
    grid = advantage_region(range(10, 71, 10), [20], 0, 0, 0)
    labels = [row[0] for row in grid.labels]
    assert labels[0] != "Quantum" and labels[-1] == "Quantum"
    assert all(t == pytest.approx(t_quantum(1.0)) for row in grid.t_quantum for t in row)


def test_halving_errors_enlarges_quantum_region():
    ns, ms = range(30, 71, 4), range(8, 33, 4)
    now = advantage_region(ns, ms, E1, E2, ER).quantum_cells()
    half = advantage_region(ns, ms, E1 / 2, E2 / 2, ER / 2).quantum_cells()
    assert now and now <= half and len(half) > len(now)


def test_region_csv():
    text = advantage_region([20, 40], [10], E1, E2, ER).to_csv()
    lines = text.splitlines()
    assert lines[0] == "n,m,F,t_sa,t_sfa,t_quantum,label"
    assert len(lines) == 3
    with pytest.raises(CostError):
        advantage_region([], [10], E1, E2, ER)
