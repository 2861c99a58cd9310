"""Shared builders and independent oracles for the test suite."""
from __future__ import annotations

import numpy as np

from rqcbench.circuit import FULL, generate_rqc
from rqcbench.lattice import LatticeTopology, PatternSet


def lattice_circuit(rows, cols, m, seed, variant=FULL, **kw):
    topo = LatticeTopology.staggered(rows, cols)
    return generate_rqc(topo, PatternSet.default(topo), m, seed, variant, **kw)


def embed(mat, targets, n):
    """Full 2^n x 2^n matrix of a gate; qubit q is bit q, first target is the MSB of ``mat``."""
    dim = 2**n
    idx = np.arange(dim)
    k = len(targets)
    sub = np.zeros(dim, dtype=np.int64)
    for pos, t in enumerate(targets):
        sub |= ((idx >> t) & 1) << (k - 1 - pos)
    mask = 0
    for t in targets:
        mask |= 1 << t
    rest = idx & ~mask
    same = rest[:, None] == rest[None, :]
    return np.where(same, mat[sub[:, None], sub[None, :]], 0)


def dense_state(circuit):
    """State by explicit multiplication of full-size gate matrices."""
    n = circuit.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for _, _, g in circuit.gates():
        psi = embed(g.matrix(), g.targets, n) @ psi
    return psi


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)
