"""Cut scoring and search.

A cut is scored by its effective number of cross gates

    L = g_cut - g_wedge - g_dcd - g_startend / 2

where the three credits come from gate formations that need fewer Schmidt
terms than their gate count suggests:

* wedge: two cross gates with different partners that are consecutive
  two-qubit gates on a shared qubit ``a``; the fused block has a single
  qubit on one side, hence at most four terms.
* DCD: gates on ``(a, b)``, ``(b, c)``, ``(a, b)`` where the ``(a, b)`` pair is
  cross, consecutive on ``a``, and ``(b, c)`` is the only two-qubit gate on
  ``b`` between them (and does not cross).
* start / end: a cross gate with no earlier (later) two-qubit gate on
  either of its qubits.

Formations are matched greedily in circuit order, wedges first, then DCDs,
then boundary gates; each gate joins at most one formation.

Cuts are searched over a family of monotone staircase boundaries: per row a
column threshold (or per column a row threshold) that never decreases, or
never increases, along the lattice.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import Circuit, Cut, generate_rqc
from .lattice import DEFAULT_SEQUENCE, DEG45, DEG135, LatticeTopology, PatternSet, chains


class CutSearchError(ValueError):
    pass


@dataclass(frozen=True)
class CutReport:
    g_cut: int
    g_wedge: int
    g_dcd: int
    g_startend: int

    def __post_init__(self):
        if min(self.g_cut, self.g_wedge, self.g_dcd, self.g_startend) < 0:
            raise ValueError("formation counts must be non-negative")
        if self.g_wedge + self.g_dcd > self.g_cut:
            raise ValueError("more wedge/DCD credits than cross gates")

    @property
    def L(self) -> Fraction:
        return Fraction(self.g_cut - self.g_wedge - self.g_dcd) - Fraction(self.g_startend, 2)

    def to_dict(self) -> dict:
        L = self.L
        return {
            "g_cut": self.g_cut,
            "g_wedge": self.g_wedge,
            "g_dcd": self.g_dcd,
            "g_startend": self.g_startend,
            "L": str(L),
            "L_float": float(L),
        }


class FormationCounter:
    """Precomputed two-qubit gate structure of one circuit, reusable across cuts."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        gates = circuit.two_qubit_gates()
        self.a = np.array([g.targets[0] for _, _, g in gates], dtype=np.int64)
        self.b = np.array([g.targets[1] for _, _, g in gates], dtype=np.int64)
        self.locations = [(li, gi) for li, gi, _ in gates]
        n_g = len(gates)
        # neighbouring two-qubit gates on each target, -1 if none
        self.next = np.full((n_g, 2), -1, dtype=np.int64)
        self.prev = np.full((n_g, 2), -1, dtype=np.int64)
        last: Dict[int, Tuple[int, int]] = {}
        for k in range(n_g):
            for j, q in enumerate((self.a[k], self.b[k])):
                if q in last:
                    pk, pj = last[q]
                    self.next[pk, pj] = k
                    self.prev[k, j] = pk
                last[q] = (k, j)

    def _other(self, k: int, j: int) -> int:
        return int(self.b[k] if j == 0 else self.a[k])

    def _slot(self, k: int, q: int) -> int:
        return 0 if self.a[k] == q else 1

    def report(self, side: np.ndarray, detail: bool = False):
        """``side`` is a boolean array over logical qubits (True = side 1)."""
        cross = side[self.a] != side[self.b]
        idx = np.flatnonzero(cross)
        used = np.zeros(len(self.a), dtype=bool)
        log = []
        wedge = dcd = startend = 0
        for k in idx:
            if used[k]:
                continue
            for j in (0, 1):
                y = self.next[k, j]
                if y < 0 or used[y] or not cross[y]:
                    continue
                q = int(self.a[k] if j == 0 else self.b[k])
                if self._other(y, self._slot(y, q)) == self._other(k, j):
                    continue  # same pair: not a wedge
                used[k] = used[y] = True
                wedge += 1
                log.append(("wedge", int(k), int(y)))
                break
        for k in idx:
            if used[k]:
                continue
            for j in (0, 1):
                y = self.next[k, j]  # next gate on the shared qubit
                if y < 0 or used[y] or not cross[y]:
                    continue
                if {int(self.a[y]), int(self.b[y])} != {int(self.a[k]), int(self.b[k])}:
                    continue
                mid = self.next[k, 1 - j]  # next gate on the other qubit
                if mid < 0 or mid == y or used[mid] or cross[mid]:
                    continue
                bq = self._other(k, j)
                if self.next[mid, self._slot(mid, bq)] != y:
                    continue
                used[k] = used[y] = used[mid] = True
                dcd += 1
                log.append(("dcd", int(k), int(mid), int(y)))
                break
        for k in idx:
            if used[k]:
                continue
            if (self.prev[k] < 0).all():
                used[k] = True
                startend += 1
                log.append(("start", int(k)))
            elif (self.next[k] < 0).all():
                used[k] = True
                startend += 1
                log.append(("end", int(k)))
        rep = CutReport(int(cross.sum()), wedge, dcd, startend)
        return (rep, log) if detail else rep


def count_formations(circuit: Circuit, cut: Cut) -> CutReport:
    cut.check(circuit.n_qubits)
    side = np.zeros(circuit.n_qubits, dtype=bool)
    side[list(cut.side1)] = True
    return FormationCounter(circuit).report(side)


# ---- cut family ---------------------------------------------------------------------

def _grid(circuit: Circuit) -> Tuple[int, int]:
    if circuit.topology is not None:
        return circuit.topology.rows, circuit.topology.cols
    rows = 1 + max(r for r, _ in circuit.qubit_order)
    cols = 1 + max(c for _, c in circuit.qubit_order)
    return rows, cols


def _monotone(length: int, top: int):
    """Non-decreasing sequences of ``length`` values in 0..top."""
    return itertools.combinations_with_replacement(range(top + 1), length)


def monotone_cuts(circuit: Circuit) -> List[frozenset]:
    """Distinct side-1 sets of the staircase family, normalised to contain qubit 0.

    Trivial cuts (one side empty) are excluded.
    """
    rows, cols = _grid(circuit)
    pos = list(circuit.qubit_order)
    n = len(pos)
    seen = set()
    out = []

    def add(members):
        s = frozenset(members)
        if not s or len(s) == n:
            return
        if 0 not in s:
            s = frozenset(range(n)) - s
        if s not in seen:
            seen.add(s)
            out.append(s)

    for thr in _monotone(rows, cols):
        for t in (thr, thr[::-1]):
            add(i for i, (r, c) in enumerate(pos) if c < t[r])
    for thr in _monotone(cols, rows):
        for t in (thr, thr[::-1]):
            add(i for i, (r, c) in enumerate(pos) if r < t[c])
    out.sort(key=lambda s: tuple(sorted(s)))
    return out


def _cut_key(side1: frozenset) -> tuple:
    return tuple(sorted(side1))


def _as_cut(side1: frozenset, n: int) -> Cut:
    s2 = frozenset(range(n)) - side1
    if len(s2) > len(side1):
        side1, s2 = s2, side1
    return Cut(side1, s2)


@dataclass
class SearchResult:
    cut: Cut
    report: CutReport
    evaluated: int
    strategy: str

    def __iter__(self):
        # unpacks as (cut, report)
        return iter((self.cut, self.report))


def _feasible(s: frozenset, n: int, max_imbalance: int) -> bool:
    return abs(2 * len(s) - n) <= max_imbalance


def search_optimal_cut(
    circuit: Circuit,
    max_imbalance: int,
    strategy: str = "exhaustive",
    seed: int = 0,
    restarts: int = 8,
    candidates: Optional[Sequence[frozenset]] = None,
) -> SearchResult:
    """Cut minimising L subject to ``|n1 - n2| <= max_imbalance``.

    ``exhaustive`` scores every member of the staircase family (or of
    ``candidates``); ``heuristic`` runs seeded local search over the same
    family, moving between cuts that differ in one qubit.  Ties break on
    the sorted side containing qubit 0.
    """
    n = circuit.n_qubits
    fam = monotone_cuts(circuit) if candidates is None else [frozenset(c) for c in candidates]
    fam = [s for s in fam if _feasible(s, n, max_imbalance)]
    if not fam:
        raise CutSearchError(f"no cut with imbalance <= {max_imbalance}")
    counter = FormationCounter(circuit)
    cache: Dict[frozenset, CutReport] = {}

    def score(s):
        if s not in cache:
            side = np.zeros(n, dtype=bool)
            side[list(s)] = True
            cache[s] = counter.report(side)
        return (cache[s].L, _cut_key(s))

    if strategy == "exhaustive":
        best = min(fam, key=score)
    elif strategy == "heuristic":
        best = _local_search(fam, score, seed, restarts, n)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return SearchResult(_as_cut(best, n), cache[best], len(cache), strategy)


def _local_search(fam, score, seed, restarts, n):
    rng = np.random.default_rng(seed)
    members = set(fam)

    def neighbours(s):
        # family members differing from s in exactly one qubit
        out = []
        for q in range(n):
            t = s - {q} if q in s else s | {q}
            if t in members:
                out.append(t)
        return out

    best = None
    for _ in range(max(1, restarts)):
        cur = fam[int(rng.integers(len(fam)))]
        while True:
            nb = min(neighbours(cur), key=score, default=None)
            if nb is None or score(nb) >= score(cur):
                break
            cur = nb
        if best is None or score(cur) < score(best):
            best = cur
    return best


def brute_force_cut(circuit: Circuit, max_imbalance: int) -> Tuple[Fraction, frozenset]:
    """Minimum L over every bipartition (test oracle; exponential in n)."""
    n = circuit.n_qubits
    counter = FormationCounter(circuit)
    best = None
    for bits in range(1, 2 ** (n - 1)):
        side = np.array([(bits >> q) & 1 for q in range(n)], dtype=bool)
        # qubit n-1 always on side 2, so every bipartition appears once
        s = frozenset(np.flatnonzero(side).tolist())
        if not _feasible(s, n, max_imbalance):
            continue
        val = counter.report(side).L
        if best is None or val < best[0]:
            best = (val, s)
    if best is None:
        raise CutSearchError(f"no cut with imbalance <= {max_imbalance}")
    return best


# ---- pattern search -----------------------------------------------------------------

@dataclass
class PatternSearchResult:
    patterns: PatternSet
    min_L: Fraction
    phases45: Tuple[int, ...]
    phases135: Tuple[int, ...]
    cut: Cut
    evaluated: int

    def __iter__(self):
        return iter((self.patterns, self.min_L))


def _imbalance_for(n: int, max_partition_size: Optional[int]) -> int:
    if max_partition_size is None:
        return n
    if 2 * max_partition_size < n:
        raise CutSearchError(f"a side of at most {max_partition_size} qubits cannot hold {n} qubits")
    return 2 * max_partition_size - n


def min_L(
    topology: LatticeTopology,
    patterns: PatternSet,
    m: int,
    sequence: str = DEFAULT_SEQUENCE,
    max_imbalance: Optional[int] = None,
    strategy: str = "exhaustive",
    seed: int = 0,
) -> Tuple[Fraction, Cut]:
    circ = generate_rqc(topology, patterns, m, 0, sequence=sequence)
    res = search_optimal_cut(circ, circ.n_qubits if max_imbalance is None else max_imbalance, strategy, seed)
    return res.report.L, res.cut


def search_patterns(
    topology: LatticeTopology,
    m: int,
    sequence: str = DEFAULT_SEQUENCE,
    max_partition_size: Optional[int] = None,
    max_exhaustive: int = 4096,
    cut_strategy: str = "exhaustive",
    seed: int = 0,
    fixed45: Optional[Dict[int, int]] = None,
    fixed135: Optional[Dict[int, int]] = None,
    restarts: int = 1,
) -> PatternSearchResult:
    """Pattern set maximising Min_L, the smallest L over allowed cuts.

    Every valid A/B (C/D) split alternates along each same-orientation
    chain, so a split is one phase bit per chain.  All assignments are tried
    when there are at most ``max_exhaustive``; otherwise seeded coordinate
    ascent flips one bit at a time, from ``restarts`` random starts.
    ``max_partition_size`` caps the qubits on either side of a cut.  ``fixed45`` / ``fixed135`` pin chain phases by
    chain index.  Ties go to the lexicographically smallest phases.
    """
    k45 = len(chains(topology, DEG45))
    k135 = len(chains(topology, DEG135))
    fixed45, fixed135 = dict(fixed45 or {}), dict(fixed135 or {})
    free = [("45", i) for i in range(k45) if i not in fixed45] + [("135", i) for i in range(k135) if i not in fixed135]
    imb = _imbalance_for(topology.n_qubits, max_partition_size)
    cache: Dict[tuple, Tuple[Fraction, Cut]] = {}

    def phases(bits):
        p45 = [fixed45.get(i, 0) for i in range(k45)]
        p135 = [fixed135.get(i, 0) for i in range(k135)]
        for (kind, i), b in zip(free, bits):
            (p45 if kind == "45" else p135)[i] = b
        return tuple(p45), tuple(p135)

    def evaluate(bits):
        key = phases(bits)
        if key not in cache:
            pats = PatternSet.from_phases(topology, *key)
            cache[key] = min_L(topology, pats, m, sequence, imb, cut_strategy, seed)
        return cache[key][0]

    def rank(bits):
        # larger Min_L first, then smaller phase tuple
        p45, p135 = phases(bits)
        return (-evaluate(bits), p45 + p135)

    if k45 + k135 == 0:
        raise CutSearchError("topology has no edges to split")
    if 2 ** len(free) <= max_exhaustive:
        best = min(itertools.product((0, 1), repeat=len(free)), key=rank)
    else:
        rng = np.random.default_rng(seed)
        best = None
        for _ in range(max(1, restarts)):
            cur = tuple(int(b) for b in rng.integers(0, 2, size=len(free)))
            improved = True
            while improved:
                improved = False
                for i in range(len(free)):
                    cand = cur[:i] + (1 - cur[i],) + cur[i + 1 :]
                    if rank(cand) < rank(cur):
                        cur, improved = cand, True
            if best is None or rank(cur) < rank(best):
                best = cur
    p45, p135 = phases(best)
    val, cut = cache[(p45, p135)]
    return PatternSearchResult(PatternSet.from_phases(topology, p45, p135), val, p45, p135, cut, len(cache))


# ---- reports ------------------------------------------------------------------------

def cutplan_report(circuit: Circuit, cut: Cut, fidelity: Optional[float] = None, constants=None) -> dict:
    """Cut description, formation counts, path count and projected SFA cost."""
    from .cost import CostConstants, sfa_path_seconds
    from .sfa import path_count

    counter = FormationCounter(circuit)
    side = np.zeros(circuit.n_qubits, dtype=bool)
    side[list(cut.side1)] = True
    rep, log = counter.report(side, detail=True)
    total, ranks = path_count(circuit, cut)
    out = {
        "cut": cut.to_dict(),
        "sizes": sorted(cut.sizes, reverse=True),
        "report": rep.to_dict(),
        "formations": [
            {"kind": f[0], "gates": [list(counter.locations[k]) for k in f[1:]]} for f in log
        ],
        "path_count": total,
        "log2_path_count": float(np.log2(float(total))) if total else 0.0,
        "ranks": ranks,
    }
    if fidelity is not None:
        c = constants or CostConstants()
        out["projected_sfa"] = sfa_path_seconds(total, fidelity, max(cut.sizes), c)
    return out
