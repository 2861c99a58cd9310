"""Compute one circuit two ways: full state vector and Schroedinger-Feynman paths.

The SFA engine splits the qubits in two and sums over the Schmidt terms of
every cross gate.  Boundary simplification turns start and end cross gates
into controlled-phase gates, which halves their rank.
"""
import time

import numpy as np

from rqcbench.circuit import generate_rqc
from rqcbench.cutopt import search_optimal_cut
from rqcbench.lattice import LatticeTopology, PatternSet
from rqcbench.sfa import Full, TopFidelity, path_count, sfa_amplitudes
from rqcbench.statevec import run

topo = LatticeTopology.staggered(3, 4)
circuit = generate_rqc(topo, PatternSet.default(topo), 8, seed=7)
print(f"{circuit.n_qubits} qubits, {circuit.cycles} cycles")

t0 = time.perf_counter()
ref = run(circuit).amps
print(f"state vector: {time.perf_counter() - t0:.3f} s")

cut, report = search_optimal_cut(circuit, max_imbalance=0)
print(f"balanced cut {cut.sizes}, {report.g_cut} cross gates, L = {report.L}")
for simplify in (False, True):
    paths, ranks = path_count(circuit, cut, simplify)
    t0 = time.perf_counter()
    res = sfa_amplitudes(circuit, cut, mode=Full(), simplify=simplify)
    err = np.max(np.abs(res.amplitudes - ref))
    print(f"  simplify={simplify}: {paths} paths, ranks {ranks}, "
          f"{time.perf_counter() - t0:.3f} s, max error {err:.1e}")

# Keeping only the heaviest paths gives a cheaper, lower-fidelity state.
for F in (0.5, 0.1):
    res = sfa_amplitudes(circuit, cut, mode=TopFidelity(F))
    overlap = abs(np.vdot(ref, res.amplitudes)) ** 2 / np.vdot(res.amplitudes, res.amplitudes).real
    print(f"top paths for F = {F}: {res.n_paths} paths (path fidelity {res.fidelity:.3f}), overlap with exact state {overlap:.3f}")
