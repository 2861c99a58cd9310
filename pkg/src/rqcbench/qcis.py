"""QCIS text I/O for random circuits.

Supported instructions: ``X2P``, ``Y2P``, ``XY2P <q> <azimuth>``,
``FSIM <coupler> <index>``, ``B``, ``M`` and ``I``.  Anything after ``//`` is
ignored, as are blank lines.

QCIS carries no numeric gate parameters: an ``FSIM`` index refers to a table
of :class:`ISwapLikeParams` kept outside the program.  Index 1 is always the
nominal gate.  A coupler ``G<hi><lo>`` maps to targets ``(lo, hi)``.
"""
from __future__ import annotations

from math import isclose, pi
from typing import Dict, List, Mapping, Optional, Tuple

from .circuit import Circuit, Layer
from .gates import Gate, ISwapLikeParams
from .lattice import coupler_name, parse_coupler_name, parse_qubit_name, position_of, qubit_name

SQRT_W_AZIMUTH = "0.785398163397448"
_OPS_1Q = {"SqrtX": "X2P", "SqrtY": "Y2P"}
NOMINAL = ISwapLikeParams()


class QcisError(ValueError):
    pass


def fsim_table(circuit: Circuit) -> Dict[int, ISwapLikeParams]:
    """FSIM index -> parameters, in order of first appearance after the nominal gate."""
    table = {1: NOMINAL}
    seen = {NOMINAL: 1}
    for _, _, g in circuit.gates():
        if g.name == "ISwapLike" and g.params not in seen:
            seen[g.params] = len(table) + 1
            table[len(table) + 1] = g.params
    return table


def _site_names(circuit: Circuit) -> Tuple[List[int], int]:
    if circuit.topology is not None:
        t = circuit.topology
        return [t.index(p) for p in circuit.qubit_order], t.rows * t.cols
    cols = 1 + max((c for _, c in circuit.qubit_order), default=0)
    return [r * cols + c + 1 for r, c in circuit.qubit_order], 99


def emit_qcis(circuit: Circuit) -> str:
    """Render ``circuit`` as a QProgram; layers are separated by ``B`` lines."""
    idx, n_sites = _site_names(circuit)
    names = [qubit_name(i, n_sites) for i in idx]
    table = {p: k for k, p in fsim_table(circuit).items()}
    lines: List[str] = []
    for li, layer in enumerate(circuit.layers):
        if li:
            lines.append("B " + " ".join(names))
        for g in layer.gates:
            if g.name in _OPS_1Q:
                lines.append(f"{_OPS_1Q[g.name]} {names[g.targets[0]]}")
            elif g.name == "SqrtW":
                lines.append(f"XY2P {names[g.targets[0]]} {SQRT_W_AZIMUTH}")
            elif g.name == "ISwapLike":
                a, b = (idx[t] for t in g.targets)
                if a > b:
                    raise QcisError(f"FSIM targets must be ordered low index first, got {g.targets}")
                lines.append(f"FSIM {coupler_name(a, b, n_sites)} {table[g.params]}")
            else:
                raise QcisError(f"{g.name} has no QCIS encoding")
    lines.extend(f"M {nm}" for nm in names)
    return "\n".join(lines) + "\n"


def _qubit(tok: str) -> int:
    try:
        return parse_qubit_name(tok)
    except ValueError as exc:
        raise QcisError(str(exc)) from None


def parse_qcis(
    text: str,
    cols: int = 6,
    fsim_params: Optional[Mapping[int, ISwapLikeParams]] = None,
) -> Circuit:
    """Parse a QProgram into a :class:`Circuit`.

    ``B`` closes the current layer; a change between single- and two-qubit
    instructions also starts a new layer, so programs without barriers are
    accepted.  Empty layers are inserted where needed to keep the
    single/two alternation.  Qubits are every ``Q`` name that appears,
    numbered in increasing site index; ``cols`` maps site indices to lattice
    positions.
    """
    fsim_params = dict(fsim_params or {1: NOMINAL})
    raw: List[List[Tuple[str, Tuple[int, ...], object]]] = []
    cur: List[Tuple[str, Tuple[int, ...], object]] = []
    cur_arity = 0
    used: Dict[int, int] = {}
    sites = set()
    started = False

    def close():
        nonlocal cur, cur_arity, used
        raw.append(cur)
        cur, cur_arity, used = [], 0, {}

    def add(name, targets, params, lineno):
        nonlocal cur_arity, started
        started = True
        if cur and len(targets) != cur_arity:
            close()
        cur_arity = len(targets)
        for t in targets:
            if t in used:
                raise QcisError(f"line {lineno}: qubit Q{t:02d} already used in this layer")
            used[t] = lineno
        cur.append((name, targets, params))

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("//", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        op, args = tok[0].upper(), tok[1:]
        if op in ("X2P", "Y2P"):
            if len(args) != 1:
                raise QcisError(f"line {lineno}: {op} takes one qubit")
            q = _qubit(args[0])
            sites.add(q)
            add("SqrtX" if op == "X2P" else "SqrtY", (q,), None, lineno)
        elif op == "XY2P":
            if len(args) != 2:
                raise QcisError(f"line {lineno}: XY2P takes a qubit and an azimuth")
            try:
                az = float(args[1])
            except ValueError:
                raise QcisError(f"line {lineno}: bad azimuth {args[1]!r}") from None
            if not isclose(az, pi / 4, abs_tol=1e-12):
                raise QcisError(f"line {lineno}: only azimuth pi/4 (SqrtW) is supported")
            q = _qubit(args[0])
            sites.add(q)
            add("SqrtW", (q,), None, lineno)
        elif op == "FSIM":
            if len(args) != 2:
                raise QcisError(f"line {lineno}: FSIM takes a coupler and an index")
            try:
                hi, lo = parse_coupler_name(args[0])
            except ValueError as exc:
                raise QcisError(f"line {lineno}: {exc}") from None
            try:
                params = fsim_params[int(args[1])]
            except (ValueError, KeyError):
                raise QcisError(f"line {lineno}: unknown FSIM index {args[1]!r}") from None
            a, b = sorted((hi, lo))
            if a == b:
                raise QcisError(f"line {lineno}: coupler {args[0]} joins a qubit to itself")
            sites.update((a, b))
            add("ISwapLike", (a, b), params, lineno)
        elif op == "B":
            for a in args:
                if a[:1] == "Q":
                    sites.add(_qubit(a))
            started = True
            close()
        elif op == "M":
            for a in args:
                sites.add(_qubit(a))
        elif op == "I":
            for a in args[:1]:
                sites.add(_qubit(a))
        else:
            raise QcisError(f"line {lineno}: unknown opcode {tok[0]!r}")
    if cur or (started and raw):
        close()

    order = sorted(sites)
    logical = {s: i for i, s in enumerate(order)}
    layers: List[Layer] = []
    for block in raw:
        kind = "two" if block and len(block[0][1]) == 2 else "single"
        want = "single" if len(layers) % 2 == 0 else "two"
        if block and kind != want:
            layers.append(Layer(want, ()))
        else:
            kind = want
        gates = tuple(Gate(nm, tuple(logical[t] for t in tg), pr) for nm, tg, pr in block)
        layers.append(Layer(kind, gates))
    if layers and layers[-1].kind == "two":
        layers.append(Layer("single", ()))
    return Circuit(
        n_qubits=len(order),
        layers=tuple(layers),
        qubit_order=tuple(position_of(s, cols) for s in order),
    )
