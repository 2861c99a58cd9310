"""Staggered rectangular qubit lattices and coupler activation patterns.

Qubits sit at ``(row, col)``.  Odd rows are shifted half a site to the left,
so the horizontal coordinate is ``x = 2*col - (row % 2)`` and every coupler
joins ``(r, x)`` to ``(r + 1, x +/- 1)``: a diagonal neighbour.  An edge whose
lower-row endpoint is one step right of its upper-row endpoint is ``deg45``;
one step left is ``deg135``.

Qubits are named ``Q<idx>`` with ``idx = row*cols + col + 1`` (row-major,
1-based); this is the naming used by the 66-qubit device listings.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

Pos = Tuple[int, int]

DEG45 = "deg45"
DEG135 = "deg135"
PATTERN_NAMES = ("A", "B", "C", "D")
DEFAULT_SEQUENCE = "ABCDCDAB"


def x_coord(pos: Pos) -> int:
    r, c = pos
    return 2 * c - (r % 2)


@dataclass(frozen=True, order=True)
class Edge:
    """Coupler between ``a`` (row r) and ``b`` (row r + 1)."""

    a: Pos
    b: Pos
    orientation: str

    @property
    def qubits(self) -> Tuple[Pos, Pos]:
        return (self.a, self.b)

    def to_list(self) -> list:
        return [list(self.a), list(self.b)]


def make_edge(p: Pos, q: Pos) -> Edge:
    p, q = tuple(p), tuple(q)
    if p[0] > q[0]:
        p, q = q, p
    if q[0] != p[0] + 1 or abs(x_coord(q) - x_coord(p)) != 1:
        raise ValueError(f"{p} and {q} are not diagonal lattice neighbours")
    orient = DEG45 if x_coord(q) - x_coord(p) == 1 else DEG135
    return Edge(p, q, orient)


@dataclass(frozen=True)
class LatticeTopology:
    rows: int
    cols: int
    active_qubits: FrozenSet[Pos]
    edges: FrozenSet[Edge]

    @classmethod
    def staggered(cls, rows: int, cols: int, disabled: Iterable[Pos] = ()) -> "LatticeTopology":
        """Full staggered lattice minus ``disabled`` sites."""
        off = {tuple(p) for p in disabled}
        active = frozenset(
            (r, c) for r in range(rows) for c in range(cols) if (r, c) not in off
        )
        edges = set()
        for (r, c) in active:
            for c2 in range(cols):
                q = (r + 1, c2)
                if q in active and abs(x_coord(q) - x_coord((r, c))) == 1:
                    edges.add(make_edge((r, c), q))
        return cls(rows, cols, active, frozenset(edges))

    @property
    def qubits(self) -> List[Pos]:
        """Active qubits in row-major order; list index is the logical id."""
        return sorted(self.active_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.active_qubits)

    def index(self, pos: Pos) -> int:
        return pos[0] * self.cols + pos[1] + 1

    def name(self, pos: Pos) -> str:
        return qubit_name(self.index(pos), self.rows * self.cols)

    def edges_of(self, orientation: str) -> List[Edge]:
        return sorted(e for e in self.edges if e.orientation == orientation)

    def validate(self) -> List[str]:
        problems = []
        if len(self.active_qubits) > self.rows * self.cols:
            problems.append("more active qubits than lattice sites")
        for p in self.active_qubits:
            if not (0 <= p[0] < self.rows and 0 <= p[1] < self.cols):
                problems.append(f"qubit {p} outside the lattice")
        for e in self.edges:
            if e.a not in self.active_qubits or e.b not in self.active_qubits:
                problems.append(f"edge {e} touches an inactive qubit")
                continue
            try:
                ref = make_edge(e.a, e.b)
            except ValueError as exc:
                problems.append(str(exc))
                continue
            if ref != e:
                problems.append(f"edge {e} has inconsistent orientation")
        return problems

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "active_qubits": [list(p) for p in sorted(self.active_qubits)],
            "edges": [
                {"qubits": e.to_list(), "orientation": e.orientation} for e in sorted(self.edges)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeTopology":
        active = frozenset(tuple(p) for p in d["active_qubits"])
        edges = frozenset(
            Edge(tuple(e["qubits"][0]), tuple(e["qubits"][1]), e["orientation"]) for e in d["edges"]
        )
        return cls(int(d["rows"]), int(d["cols"]), active, edges)


def qubit_name(index: int, n_sites: int = 99) -> str:
    width = max(2, len(str(n_sites)))
    return f"Q{index:0{width}d}"


def chains(topology: LatticeTopology, orientation: str) -> List[List[Edge]]:
    """Maximal paths of same-orientation edges, ordered top to bottom.

    Each qubit has at most one same-orientation neighbour above and one
    below, so these components are simple paths.  Chains are sorted by
    their top qubit.
    """
    es = topology.edges_of(orientation)
    down = {e.a: e for e in es}
    has_up = {e.b for e in es}
    out = []
    for start in sorted(down):
        if start in has_up:
            continue
        chain, q = [], start
        while q in down:
            chain.append(down[q])
            q = down[q].b
        out.append(chain)
    return out


@dataclass(frozen=True)
class PatternSet:
    A: FrozenSet[Edge]
    B: FrozenSet[Edge]
    C: FrozenSet[Edge]
    D: FrozenSet[Edge]

    def __getitem__(self, name: str) -> FrozenSet[Edge]:
        return getattr(self, name)

    @classmethod
    def from_phases(
        cls, topology: LatticeTopology, phases45: Sequence[int], phases135: Sequence[int]
    ) -> "PatternSet":
        """Split each chain alternately; ``phase`` picks which parity goes to A (C)."""
        sets = {}
        for orient, phases, (first, second) in (
            (DEG45, phases45, ("A", "B")),
            (DEG135, phases135, ("C", "D")),
        ):
            ch = chains(topology, orient)
            if len(phases) != len(ch):
                raise ValueError(f"need {len(ch)} {orient} phases, got {len(phases)}")
            x, y = set(), set()
            for chain, ph in zip(ch, phases):
                for k, e in enumerate(chain):
                    (x if k % 2 == ph % 2 else y).add(e)
            sets[first], sets[second] = frozenset(x), frozenset(y)
        return cls(**sets)

    @classmethod
    def default(cls, topology: LatticeTopology) -> "PatternSet":
        return cls.from_phases(
            topology,
            [0] * len(chains(topology, DEG45)),
            [0] * len(chains(topology, DEG135)),
        )

    def validate(self, topology: LatticeTopology) -> List[str]:
        problems = []
        for name in PATTERN_NAMES:
            seen: Dict[Pos, Edge] = {}
            for e in sorted(self[name]):
                if e not in topology.edges:
                    problems.append(f"pattern {name}: edge {e} not in topology")
                for q in e.qubits:
                    if q in seen:
                        problems.append(f"pattern {name}: edges {seen[q]} and {e} share {q}")
                    seen[q] = e
        for (x, y), orient in ((("A", "B"), DEG45), (("C", "D"), DEG135)):
            want = set(topology.edges_of(orient))
            if self[x] & self[y]:
                problems.append(f"patterns {x} and {y} overlap")
            if set(self[x]) | set(self[y]) != want:
                problems.append(f"patterns {x} and {y} do not cover all {orient} edges")
        return problems

    def to_dict(self) -> dict:
        return {name: [e.to_list() for e in sorted(self[name])] for name in PATTERN_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "PatternSet":
        return cls(
            **{name: frozenset(make_edge(tuple(a), tuple(b)) for a, b in d[name]) for name in PATTERN_NAMES}
        )


def all_phase_assignments(topology: LatticeTopology):
    """Every vertex-disjoint A/B and C/D split, as (phases45, phases135)."""
    k45 = len(chains(topology, DEG45))
    k135 = len(chains(topology, DEG135))
    for p45 in itertools.product((0, 1), repeat=k45):
        for p135 in itertools.product((0, 1), repeat=k135):
            yield p45, p135


def zuchongzhi_56() -> Tuple[LatticeTopology, PatternSet, dict]:
    """56-qubit subset of the 11x6 device with coupler patterns.

    Returns ``(topology, patterns, meta)``.  ``meta["verified"]`` is False:
    the site list and the pattern phases are a best-effort reconstruction
    (see ``meta["notes"]``), not an authoritative device description.
    """
    raw = json.loads(resources.files("rqcbench.data").joinpath("zuchongzhi56.json").read_text())
    rows, cols = raw["rows"], raw["cols"]
    disabled = [((i - 1) // cols, (i - 1) % cols) for i in raw["disabled_qubits"]]
    topo = LatticeTopology.staggered(rows, cols, disabled)
    patterns = PatternSet.from_phases(topo, raw["phases45"], raw["phases135"])
    meta = {k: raw[k] for k in ("verified", "notes", "disabled_qubits")}
    return topo, patterns, meta


def subset_topology(topology: LatticeTopology, keep: Iterable[Pos]) -> LatticeTopology:
    keep = frozenset(tuple(p) for p in keep)
    edges = frozenset(e for e in topology.edges if e.a in keep and e.b in keep)
    return LatticeTopology(topology.rows, topology.cols, keep & topology.active_qubits, edges)


def restrict_patterns(patterns: PatternSet, topology: LatticeTopology) -> PatternSet:
    return PatternSet(**{n: frozenset(e for e in patterns[n] if e in topology.edges) for n in PATTERN_NAMES})


def position_of(index: int, cols: int) -> Pos:
    return ((index - 1) // cols, (index - 1) % cols)


def parse_qubit_name(name: str) -> int:
    if len(name) < 2 or name[0] != "Q" or not name[1:].isdigit():
        raise ValueError(f"malformed qubit name {name!r}")
    return int(name[1:])


def parse_coupler_name(name: str) -> Tuple[int, int]:
    digits = name[1:]
    if name[:1] != "G" or not digits.isdigit() or len(digits) % 2 or len(digits) < 4:
        raise ValueError(f"malformed coupler name {name!r}")
    h = len(digits) // 2
    return int(digits[:h]), int(digits[h:])


def coupler_name(i: int, j: int, n_sites: int = 99) -> str:
    """``G<hi><lo>``: the higher-indexed (lower-row) qubit comes first."""
    width = max(2, len(str(n_sites)))
    hi, lo = max(i, j), min(i, j)
    return f"G{hi:0{width}d}{lo:0{width}d}"


def optional_topology(d: Optional[dict]) -> Optional[LatticeTopology]:
    return None if d is None else LatticeTopology.from_dict(d)
