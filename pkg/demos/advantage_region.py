"""Where does sampling on the device beat SA and SFA simulation?

For each (qubits, cycles) cell the circuit fidelity follows from the gate
and readout error rates; the fastest feasible method labels the cell.
"""
import math

from rqcbench.cost import (
    SECONDS_PER_YEAR,
    advantage_region,
    imbalanced_speedup,
    t_quantum,
    t_sa,
    t_sfa,
    table_s3,
)

n, m, F = 56, 20, 6.62e-4
print(f"{n} qubits, {m} cycles, F = {F}")
sa = t_sa(n, m)
print(f"  SA: feasible={sa.feasible}")
sfa = t_sfa(n, m, F)
print(f"  SFA: {sfa.seconds / SECONDS_PER_YEAR:.3g} years at p = {sfa.p}")
print(f"  device: {t_quantum(F):.0f} s")
print(f"  top-path speedup from imbalanced gates: {imbalanced_speedup(0.036, math.pi / 6, 42, F):.2f}x")

for row in table_s3():
    print(f"  {row.n}q {row.paths:24s} {row.core_hours:.3g} core-hours, {row.years:.4g} years")

grid = advantage_region(range(20, 71, 10), range(8, 33, 8), 0.0014, 0.0059, 0.0452)
print("\n n \\ m " + "".join(f"{mm:>9d}" for mm in grid.m_values))
for nn, labels in zip(grid.n_values, grid.labels):
    print(f"{nn:6d} " + "".join(f"{lab:>9s}" for lab in labels))
