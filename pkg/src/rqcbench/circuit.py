"""Random quantum circuits on a staggered lattice.

A circuit of ``m`` cycles is ``m`` pairs (single-qubit layer, two-qubit
layer) followed by one closing single-qubit layer.  Logical qubit ``i`` is
``qubit_order[i]``; for generated circuits that is the row-major order of the
active lattice sites.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .gates import SINGLE_QUBIT_GATES, Gate, ISwapLikeParams
from .lattice import (
    DEFAULT_SEQUENCE,
    Edge,
    LatticeTopology,
    PatternSet,
    Pos,
    make_edge,
)

FORMAT_VERSION = "rqc-v1"


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Cut:
    """Bipartition of logical qubits."""

    side1: FrozenSet[int]
    side2: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "side1", frozenset(int(q) for q in self.side1))
        object.__setattr__(self, "side2", frozenset(int(q) for q in self.side2))
        if self.side1 & self.side2:
            raise CircuitError("cut sides overlap")

    @classmethod
    def from_side(cls, side1: Iterable[int], n_qubits: int) -> "Cut":
        s1 = frozenset(side1)
        return cls(s1, frozenset(range(n_qubits)) - s1)

    @property
    def sizes(self) -> Tuple[int, int]:
        return len(self.side1), len(self.side2)

    def check(self, n_qubits: int) -> None:
        if self.side1 | self.side2 != frozenset(range(n_qubits)):
            raise CircuitError("cut is not a bipartition of the circuit qubits")

    def crosses(self, targets: Sequence[int]) -> bool:
        a, b = targets
        return (a in self.side1) != (b in self.side1)

    def to_dict(self) -> dict:
        return {"side1": sorted(self.side1), "side2": sorted(self.side2)}

    @classmethod
    def from_dict(cls, d: dict) -> "Cut":
        return cls(frozenset(d["side1"]), frozenset(d["side2"]))


@dataclass(frozen=True)
class CircuitVariant:
    kind: str = "full"  # full | patch | elided
    elided_cycles: Optional[int] = None
    cut: Optional[Cut] = None

    def __post_init__(self):
        if self.kind not in ("full", "patch", "elided"):
            raise CircuitError(f"unknown variant {self.kind!r}")
        if self.kind != "full" and self.cut is None:
            raise CircuitError(f"{self.kind} circuits need a cut")
        if self.kind == "elided" and self.elided_cycles is None:
            raise CircuitError("elided circuits need an explicit elided_cycles")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.elided_cycles is not None:
            d["elided_cycles"] = self.elided_cycles
        if self.cut is not None:
            d["cut"] = self.cut.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitVariant":
        cut = Cut.from_dict(d["cut"]) if "cut" in d else None
        return cls(d["kind"], d.get("elided_cycles"), cut)


FULL = CircuitVariant()


@dataclass(frozen=True)
class Layer:
    kind: str  # "single" | "two"
    gates: Tuple[Gate, ...]
    pattern: Optional[str] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "gates": [g.to_dict() for g in self.gates]}
        if self.pattern is not None:
            d["pattern"] = self.pattern
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Layer":
        return cls(d["kind"], tuple(Gate.from_dict(g) for g in d["gates"]), d.get("pattern"))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: Tuple[Layer, ...]
    qubit_order: Tuple[Pos, ...]
    seed: Optional[int] = None
    topology: Optional[LatticeTopology] = None
    patterns: Optional[PatternSet] = None
    sequence: str = DEFAULT_SEQUENCE
    variant: CircuitVariant = field(default=FULL)

    @property
    def cycles(self) -> int:
        return sum(1 for layer in self.layers if layer.kind == "two")

    def gates(self) -> Iterable[Tuple[int, int, Gate]]:
        """(layer index, position in layer, gate) in execution order."""
        for li, layer in enumerate(self.layers):
            for gi, g in enumerate(layer.gates):
                yield li, gi, g

    def two_qubit_gates(self) -> List[Tuple[int, int, Gate]]:
        return [t for t in self.gates() if t[2].arity == 2]

    def position_index(self) -> Dict[Pos, int]:
        return {p: i for i, p in enumerate(self.qubit_order)}

    def with_layers(self, layers: Sequence[Layer]) -> "Circuit":
        return replace(self, layers=tuple(layers))

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "n_qubits": self.n_qubits,
            "cycles": self.cycles,
            "seed": self.seed,
            "sequence": self.sequence,
            "qubit_order": [list(p) for p in self.qubit_order],
            "topology": None if self.topology is None else self.topology.to_dict(),
            "patterns": None if self.patterns is None else self.patterns.to_dict(),
            "variant": self.variant.to_dict(),
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        if d.get("version") != FORMAT_VERSION:
            raise CircuitError(f"unsupported circuit format {d.get('version')!r}")
        topo = None if d.get("topology") is None else LatticeTopology.from_dict(d["topology"])
        pats = None if d.get("patterns") is None else PatternSet.from_dict(d["patterns"])
        c = cls(
            n_qubits=int(d["n_qubits"]),
            layers=tuple(Layer.from_dict(x) for x in d["layers"]),
            qubit_order=tuple(tuple(p) for p in d["qubit_order"]),
            seed=d.get("seed"),
            topology=topo,
            patterns=pats,
            sequence=d.get("sequence", DEFAULT_SEQUENCE),
            variant=CircuitVariant.from_dict(d.get("variant", {"kind": "full"})),
        )
        if "cycles" in d and int(d["cycles"]) != c.cycles:
            raise CircuitError("cycles field disagrees with the layer list")
        return c

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def cross_gates(circuit: Circuit, cut: Cut) -> List[Tuple[int, int, Gate]]:
    """Two-qubit gates with one target on each side, in circuit order."""
    return [t for t in circuit.two_qubit_gates() if cut.crosses(t[2].targets)]


def generate_rqc(
    topology: LatticeTopology,
    patterns: PatternSet,
    m: int,
    seed: int,
    variant: CircuitVariant = FULL,
    gate_params: Optional[Mapping[Edge, ISwapLikeParams]] = None,
    sequence: str = DEFAULT_SEQUENCE,
    default_params: ISwapLikeParams = ISwapLikeParams(),
) -> Circuit:
    """Build an ``m``-cycle random circuit.

    Single-qubit gates are drawn with numpy's PCG64 generator seeded by
    ``seed``: uniformly from {SqrtX, SqrtY, SqrtW} in the first layer, then
    uniformly from the two gates that differ from the qubit's previous one.
    Two-qubit layer ``k`` applies every edge of pattern ``sequence[k % len]``.
    Patch drops all cross-cut gates; Elided(e) drops those of cycles 1..e.
    The single-qubit gates do not depend on the variant.
    """
    problems = topology.validate() + patterns.validate(topology)
    if problems:
        raise CircuitError("invalid pattern set: " + "; ".join(problems))
    if m < 1:
        raise CircuitError("need at least one cycle")
    if not sequence or any(ch not in "ABCD" for ch in sequence):
        raise CircuitError(f"bad pattern sequence {sequence!r}")
    order = tuple(topology.qubits)
    n = len(order)
    index = {p: i for i, p in enumerate(order)}
    cut = variant.cut
    if cut is not None:
        cut.check(n)
    if variant.kind == "elided" and not 0 <= variant.elided_cycles <= m:
        raise CircuitError(f"elided_cycles={variant.elided_cycles} outside 0..{m}")
    gate_params = gate_params or {}

    rng = np.random.default_rng(seed)
    choice = rng.integers(0, 3, size=n)
    layers: List[Layer] = []
    for k in range(m + 1):
        if k > 0:
            # shift by 1 or 2 (mod 3) so the gate never repeats
            choice = (choice + rng.integers(1, 3, size=n)) % 3
        layers.append(
            Layer("single", tuple(Gate(SINGLE_QUBIT_GATES[c], (q,)) for q, c in enumerate(choice)))
        )
        if k == m:
            break
        name = sequence[k % len(sequence)]
        drop_cross = variant.kind == "patch" or (variant.kind == "elided" and k < variant.elided_cycles)
        gates = []
        for e in sorted(patterns[name]):
            t = (index[e.a], index[e.b])
            if drop_cross and cut.crosses(t):
                continue
            gates.append(Gate("ISwapLike", t, gate_params.get(e, default_params)))
        layers.append(Layer("two", tuple(gates), name))

    return Circuit(
        n_qubits=n,
        layers=tuple(layers),
        qubit_order=order,
        seed=int(seed),
        topology=topology,
        patterns=patterns,
        sequence=sequence,
        variant=variant,
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    layer: Optional[int]
    message: str


def validate(circuit: Circuit) -> List[Violation]:
    """Check the structural rules; an empty list means the circuit is sound."""
    out: List[Violation] = []
    n = circuit.n_qubits
    kinds = [layer.kind for layer in circuit.layers]
    if kinds:
        expected = ["single" if i % 2 == 0 else "two" for i in range(len(kinds))]
        if kinds != expected or kinds[-1] != "single":
            out.append(Violation("structure", None, "layers must alternate single/two and end with single"))
    if len(circuit.qubit_order) != n:
        out.append(Violation("structure", None, "qubit_order length differs from n_qubits"))

    prev: Dict[int, str] = {}
    two_idx = 0
    for li, layer in enumerate(circuit.layers):
        used: Dict[int, int] = {}
        for gi, g in enumerate(layer.gates):
            if any(not 0 <= t < n for t in g.targets):
                out.append(Violation("range", li, f"gate {gi} targets {g.targets} outside 0..{n - 1}"))
                continue
            want = 1 if layer.kind == "single" else 2
            if g.arity != want:
                out.append(Violation("arity", li, f"{g.name} in a {layer.kind}-qubit layer"))
            for t in g.targets:
                if t in used:
                    out.append(Violation("overlap", li, f"gates {used[t]} and {gi} share qubit {t}"))
                used[t] = gi
        if layer.kind == "single":
            missing = set(range(n)) - set(used)
            if missing:
                out.append(Violation("coverage", li, f"no single-qubit gate on {sorted(missing)}"))
            for g in layer.gates:
                q = g.targets[0]
                if prev.get(q) == g.name:
                    out.append(Violation("repeat", li, f"qubit {q} repeats {g.name}"))
                prev[q] = g.name
        else:
            if circuit.patterns is not None:
                name = circuit.sequence[two_idx % len(circuit.sequence)]
                allowed = circuit.patterns[name]
                for g in layer.gates:
                    if g.arity != 2 or any(not 0 <= t < n for t in g.targets):
                        continue
                    p, q = (circuit.qubit_order[t] for t in g.targets)
                    try:
                        e = make_edge(p, q)
                    except ValueError:
                        e = None
                    if e not in allowed:
                        out.append(Violation("pattern", li, f"gate on {p}-{q} not in pattern {name}"))
            two_idx += 1
    return out


def count_cross(circuit: Circuit, cut: Cut, cycles: Optional[range] = None) -> int:
    total, k = 0, 0
    for layer in circuit.layers:
        if layer.kind != "two":
            continue
        if cycles is None or k in cycles:
            total += sum(1 for g in layer.gates if cut.crosses(g.targets))
        k += 1
    return total
