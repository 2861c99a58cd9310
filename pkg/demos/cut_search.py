"""Score cuts by their cross-gate formations and search for the cheapest one.

L = g_cut - g_wedge - g_dcd - g_startend / 2 is the log4 path count after
merging wedges and DCD formations and simplifying boundary gates.  The
search walks staircase cuts; brute force over all bipartitions serves as a
check on small lattices.
"""
from rqcbench.circuit import generate_rqc
from rqcbench.cutopt import brute_force_cut, count_formations, search_optimal_cut, search_patterns
from rqcbench.lattice import LatticeTopology, PatternSet, zuchongzhi_56

topo = LatticeTopology.staggered(2, 4)
circuit = generate_rqc(topo, PatternSet.default(topo), 8, seed=0)
for imb in (0, 2, 8):
    res = search_optimal_cut(circuit, imb)
    print(f"max imbalance {imb}: sizes {res.cut.sizes}, {res.report}, L = {res.report.L}, "
          f"brute force L = {brute_force_cut(circuit, imb)[0]}")

res = search_patterns(LatticeTopology.staggered(2, 3), 6)
print(f"pattern phases maximising the minimum L on 2x3: 45deg {res.phases45}, 135deg {res.phases135}, L = {res.min_L}")

topo, patterns, meta = zuchongzhi_56()
dev = generate_rqc(topo, patterns, 20, seed=0)
res = search_optimal_cut(dev, 20)
print(f"56-qubit device (transcription verified: {meta['verified']}): sizes {res.cut.sizes}, "
      f"{count_formations(dev, res.cut)}, L = {res.report.L}")
