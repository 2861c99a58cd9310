"""Dense state-vector (Schrödinger) simulation.

Amplitude ordering: qubit ``q`` is bit ``q`` of the basis index (qubit 0 is
the least significant bit).  Bitstrings are written with qubit 0 leftmost,
so basis index 1 on three qubits is ``"100"``.

Gate application works on strided views of the amplitude tensor and sums
matrix columns in a fixed order, so results are bit-identical for any
worker count.
"""
from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import Circuit
from .gates import PAULI_X, PAULI_Y, PAULI_Z, Gate

DTYPES = {"double": np.complex128, "single": np.complex64}
FLOAT_BYTES = {"double": 8, "single": 4}
DEFAULT_MEMORY_CAP = 16 * 2**30
SHOT_CHUNK = 4096


class MemoryCapError(MemoryError):
    def __init__(self, n: int, precision: str, cap: int):
        self.required = 2 ** (n + 1) * FLOAT_BYTES[precision]
        self.cap = cap
        super().__init__(
            f"{n} qubits at {precision} precision need 2^{n + 1} x {FLOAT_BYTES[precision]}"
            f" = {self.required} bytes, above the cap of {cap} bytes"
        )


def memory_cap() -> int:
    env = os.environ.get("RQC_MEMORY_CAP_BYTES")
    return int(env) if env else DEFAULT_MEMORY_CAP


def check_memory(n: int, precision: str = "double", cap: Optional[int] = None) -> None:
    cap = memory_cap() if cap is None else cap
    if 2 ** (n + 1) * FLOAT_BYTES[precision] > cap:
        raise MemoryCapError(n, precision, cap)


@dataclass
class StateVector:
    n: int
    amps: np.ndarray

    @classmethod
    def zero(cls, n: int, precision: str = "double") -> "StateVector":
        amps = np.zeros(2**n, dtype=DTYPES[precision])
        amps[0] = 1
        return cls(n, amps)

    @property
    def precision(self) -> str:
        return "single" if self.amps.dtype == np.complex64 else "double"

    def norm(self) -> float:
        a = self.amps.astype(np.complex128, copy=False)
        return float(np.vdot(a, a).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def _kernel(psi: np.ndarray, out: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> None:
    k = len(axes)
    combos = list(itertools.product((0, 1), repeat=k))

    def view(arr, bits):
        sl = [slice(None)] * arr.ndim
        for a, b in zip(axes, bits):
            sl[a] = b
        return arr[tuple(sl) + (Ellipsis,)]  # stays a view even when every axis is fixed

    src = [view(psi, c) for c in combos]
    for i, c in enumerate(combos):
        acc = view(out, c)
        started = False
        for j in range(2**k):
            m = mat[i, j]
            if m == 0:
                continue
            if started:
                acc += m * src[j]
            else:
                np.multiply(m, src[j], out=acc)
                started = True
        if not started:
            acc[...] = 0


def apply_matrix(
    psi: np.ndarray,
    mat: np.ndarray,
    axes: Sequence[int],
    workers: int = 1,
) -> np.ndarray:
    """Apply ``mat`` to tensor axes ``axes`` (first axis = most significant).

    ``psi`` may carry extra axes (e.g. a trajectory batch).  Each output
    amplitude is a sum over matrix columns taken in a fixed order, with
    exact zeros skipped, so splitting the work changes nothing.
    """
    # Matrix entries stay in double: rounding 1/sqrt(2) to single precision
    # would bias every gate the same way and the norm would drift.
    mat = np.asarray(mat, dtype=np.complex128)
    out = np.empty_like(psi)
    free = [a for a in range(psi.ndim) if a not in axes and psi.shape[a] > 1][:3]
    if workers > 1 and free and psi.size >= 1 << 16:
        parts = []
        for bits in itertools.product(*(range(psi.shape[a]) for a in free)):
            sl = [slice(None)] * psi.ndim
            for a, b in zip(free, bits):
                sl[a] = slice(b, b + 1)
            parts.append(tuple(sl))
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda sl: _kernel(psi[sl], out[sl], mat, axes), parts))
    else:
        _kernel(psi, out, mat, axes)
    return out


def _axes(n: int, targets: Sequence[int]) -> List[int]:
    return [n - 1 - t for t in targets]


def apply_gate(state: StateVector, mat: np.ndarray, targets: Sequence[int], workers: int = 1) -> None:
    n = state.n
    psi = state.amps.reshape((2,) * n)
    state.amps = apply_matrix(psi, mat, _axes(n, targets), workers).reshape(-1)


@dataclass
class FusedGate:
    """Product of consecutive gates acting on at most ``max_targets`` qubits.

    ``targets[0]`` is the most significant bit of ``matrix``.
    """

    targets: Tuple[int, ...]
    matrix: np.ndarray
    members: List[Gate] = field(default_factory=list, repr=False)


def _block_matrix(targets: Sequence[int], gates: Iterable[Gate]) -> np.ndarray:
    f = len(targets)
    pos = {t: i for i, t in enumerate(targets)}
    u = np.eye(2**f, dtype=complex).reshape((2,) * f + (2**f,))
    for g in gates:
        u = apply_matrix(u, g.matrix(), [pos[t] for t in g.targets])
    return u.reshape(2**f, 2**f)


def fuse(circuit: Circuit, max_targets: int = 4) -> List[FusedGate]:
    """Greedy fusion: each gate joins the latest block touching its qubits.

    A gate merges into that block when the union of targets stays within
    ``max_targets``; every later block is disjoint from the gate, so moving
    the gate earlier commutes past them.
    """
    if max_targets < 2:
        raise ValueError("max_targets must be at least 2")
    blocks: List[Tuple[List[int], List[Gate]]] = []
    last: dict = {}  # qubit -> index of latest block touching it
    for _, _, g in circuit.gates():
        touch = [last[t] for t in g.targets if t in last]
        if touch:
            b = max(touch)
            tg, members = blocks[b]
            merged = tg + [t for t in g.targets if t not in tg]
            if len(merged) <= max_targets:
                blocks[b] = (merged, members + [g])
                for t in g.targets:
                    last[t] = b
                continue
        blocks.append((list(g.targets), [g]))
        for t in g.targets:
            last[t] = len(blocks) - 1
    return [FusedGate(tuple(tg), _block_matrix(tg, gs), gs) for tg, gs in blocks]


def run(
    circuit: Circuit,
    precision: str = "double",
    memory_cap_bytes: Optional[int] = None,
    fuse_width: Optional[int] = None,
    workers: int = 1,
    check_norm: bool = False,
    initial: Optional[StateVector] = None,
) -> StateVector:
    """Apply every layer of ``circuit`` to ``|0...0>`` (or ``initial``)."""
    n = circuit.n_qubits
    check_memory(n, precision, memory_cap_bytes)
    state = StateVector.zero(n, precision) if initial is None else StateVector(n, initial.amps.astype(DTYPES[precision]))
    if fuse_width is not None:
        for fg in fuse(circuit, fuse_width):
            apply_gate(state, fg.matrix, fg.targets, workers)
        return state
    tol = 1e-6 if precision == "single" else 1e-12
    for layer in circuit.layers:
        for g in layer.gates:
            apply_gate(state, g.matrix(), g.targets, workers)
        if check_norm and abs(state.norm() - 1) > tol:
            raise ArithmeticError(f"norm drifted to {state.norm()!r}")
    return state


def bitstring_to_index(bits: str) -> int:
    return sum(1 << q for q, ch in enumerate(bits) if ch == "1")


def indices_to_bitstrings(idx: np.ndarray, n: int) -> List[str]:
    idx = np.asarray(idx, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    chars = np.where(bits == 1, "1", "0")
    return ["".join(row) for row in chars]


def bitstrings_to_indices(bitstrings: Sequence[str], n: int) -> np.ndarray:
    out = np.empty(len(bitstrings), dtype=np.int64)
    for i, b in enumerate(bitstrings):
        if len(b) != n or set(b) - {"0", "1"}:
            raise ValueError(f"bitstring {b!r} is not {n} characters of 0/1")
        out[i] = bitstring_to_index(b)
    return out


def ideal_probs(state: StateVector, bitstrings: Sequence[str]) -> np.ndarray:
    idx = bitstrings_to_indices(bitstrings, state.n)
    return np.abs(state.amps[idx].astype(np.complex128)) ** 2


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=0)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(probs) - 1)


def sample_indices(state: StateVector, n_samples: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    probs = np.abs(state.amps.astype(np.complex128)) ** 2
    return _inverse_cdf(probs, rng.random(n_samples))


def sample(state: StateVector, n_samples: int, seed) -> List[str]:
    """``n_samples`` i.i.d. bitstrings from ``|amps|^2``."""
    return indices_to_bitstrings(sample_indices(state, n_samples, seed), state.n)


@dataclass(frozen=True)
class NoiseModel:
    """Pauli error rates per 1q gate, per 2q gate, and readout flip per qubit."""

    e1: float = 0.0
    e2: float = 0.0
    er: float = 0.0

    def __post_init__(self):
        for name in ("e1", "e2", "er"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name}={v} outside [0, 1)")


_PAULI_1Q = (PAULI_X, PAULI_Y, PAULI_Z)


def _pauli_matrix(code: int, arity: int) -> np.ndarray:
    """Non-identity Pauli: ``code`` in 1..3 (1q) or 1..15 (2q, base-4 digits)."""
    mats = (np.eye(2, dtype=complex),) + _PAULI_1Q
    if arity == 1:
        return mats[code]
    return np.kron(mats[code // 4], mats[code % 4])


def _trajectory_cdfs(n, flat_gates, first, events, precision):
    """Final-state CDFs (one row per trajectory) for sparse Pauli insertions.

    ``first[b]`` is trajectory ``b``'s first erroneous gate (sorted
    ascending); ``events[g]`` lists ``(b, code)`` pairs applied after gate
    ``g``.  A trajectory joins the batch as a copy of the ideal state at its
    first error.
    """
    dtype = DTYPES[precision]
    nb = len(first)
    psi = np.zeros((2,) * n + (nb,), dtype=dtype)
    ideal = np.zeros((2,) * n, dtype=dtype)
    ideal[(0,) * n] = 1
    active = 0
    for gi, g in enumerate(flat_gates):
        ax = _axes(n, g.targets)
        mat = g.matrix()
        ideal = apply_matrix(ideal, mat, ax)
        if active:
            psi[..., :active] = apply_matrix(psi[..., :active], mat, ax)
        new = active + int(np.searchsorted(first[active:], gi, side="right"))
        if new > active:
            psi[..., active:new] = ideal[..., None]
            active = new
        ev = events.get(gi)
        if ev:
            cols = np.array([b for b, _ in ev])
            codes = np.array([c for _, c in ev])
            for code in np.unique(codes):
                sel = cols[codes == code]
                psi[..., sel] = apply_matrix(psi[..., sel], _pauli_matrix(int(code), g.arity), ax)
    probs = np.abs(psi.reshape(2**n, nb).astype(np.complex128)) ** 2
    return np.ascontiguousarray(np.cumsum(probs, axis=0).T)


def _draw(cdf_row: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cdf_row, u * cdf_row[-1], side="right")), len(cdf_row) - 1)


def _noisy_chunk(n, flat_gates, ideal_cdf, single_cache, noise, seq, size, precision):
    rng = np.random.default_rng(seq)
    n_gates = len(flat_gates)
    arity = np.array([g.arity for g in flat_gates])
    rates = np.where(arity == 1, noise.e1, noise.e2)
    errs = rng.random((size, n_gates)) < rates
    codes = np.where(
        arity == 1,
        rng.integers(1, 4, size=(size, n_gates)),
        rng.integers(1, 16, size=(size, n_gates)),
    )
    flips = rng.random((size, n)) < noise.er
    u = rng.random(size)

    out = np.minimum(np.searchsorted(ideal_cdf, u * ideal_cdf[-1], side="right"), 2**n - 1)
    n_err = errs.sum(axis=1)
    for b in np.flatnonzero(n_err == 1):
        g = int(errs[b].argmax())
        out[b] = _draw(single_cache[(g, int(codes[b, g]))], u[b])
    multi = np.flatnonzero(n_err > 1)
    if multi.size:
        first = errs[multi].argmax(axis=1)
        order = np.argsort(first, kind="stable")
        multi, first = multi[order], first[order]
        events: dict = {}
        for col, b in enumerate(multi):
            for g in np.flatnonzero(errs[b]):
                events.setdefault(int(g), []).append((col, int(codes[b, g])))
        cdfs = _trajectory_cdfs(n, flat_gates, first, events, precision)
        for col, b in enumerate(multi):
            out[b] = _draw(cdfs[col], u[b])
    weights = (1 << np.arange(n)).astype(np.int64)
    return out ^ (flips.astype(np.int64) @ weights)


def noisy_run(
    circuit: Circuit,
    noise: NoiseModel,
    seed,
    n_samples: int,
    workers: int = 1,
    precision: str = "double",
    memory_cap_bytes: Optional[int] = None,
) -> np.ndarray:
    """Trajectory sampling with Pauli gate errors and readout flips.

    After each gate, with probability ``e1`` (1q) or ``e2`` (2q), a uniformly
    random non-identity Pauli acts on the gate's targets; each measured bit
    then flips with probability ``er``.  Returns basis indices.

    Shots with one gate error reuse a precomputed final distribution for
    that (gate, Pauli) pair; shots with several errors are simulated as a
    batch.  Shots come in fixed chunks with seeds spawned from ``seed``, so
    the output does not depend on ``workers``.
    """
    n = circuit.n_qubits
    check_memory(n, precision, memory_cap_bytes)
    flat = [g for _, _, g in circuit.gates()]
    ideal = run(circuit, precision)
    ideal_cdf = np.cumsum(np.abs(ideal.amps.astype(np.complex128)) ** 2)

    keys = []
    for gi, g in enumerate(flat):
        if (noise.e1 if g.arity == 1 else noise.e2) > 0:
            keys.extend((gi, c) for c in range(1, 4 if g.arity == 1 else 16))
    single_cache = {}
    if keys:
        events = {}
        for col, (gi, c) in enumerate(keys):
            events.setdefault(gi, []).append((col, c))
        cdfs = _trajectory_cdfs(n, flat, np.array([k[0] for k in keys]), events, precision)
        single_cache = {k: cdfs[i] for i, k in enumerate(keys)}

    sizes = [min(SHOT_CHUNK, n_samples - lo) for lo in range(0, n_samples, SHOT_CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    job = lambda i: _noisy_chunk(n, flat, ideal_cdf, single_cache, noise, seqs[i], sizes[i], precision)
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


# ---- files -----------------------------------------------------------------

def write_samples(path, bitstrings: Sequence[str], n: int, seed, circuit_hash: str) -> None:
    path = Path(path)
    path.write_text("".join(b + "\n" for b in bitstrings), encoding="utf-8")
    meta = {"n": n, "n_samples": len(bitstrings), "seed": seed, "circuit_hash": circuit_hash}
    Path(str(path) + ".json").write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")


def read_samples(path) -> Tuple[List[str], Optional[dict]]:
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    side = Path(str(path) + ".json")
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else None
    return [ln for ln in lines if ln], meta


def write_amplitudes(path, amps: np.ndarray, header: Optional[dict] = None) -> None:
    """JSON header line, then little-endian interleaved (re, im) floats."""
    amps = np.asarray(amps)
    width = 4 if amps.dtype == np.complex64 else 8
    head = dict(header or {})
    head.update({"count": int(amps.size), "float_bytes": width, "layout": "interleaved-re-im-le"})
    raw = amps.astype("<c8" if width == 4 else "<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(head, sort_keys=True).encode() + b"\n")
        fh.write(raw)


def read_amplitudes(path) -> Tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        head = json.loads(fh.readline())
        data = fh.read()
    dt = "<c8" if head["float_bytes"] == 4 else "<c16"
    amps = np.frombuffer(data, dtype=dt, count=head["count"])
    return head, amps.astype(np.complex64 if head["float_bytes"] == 4 else np.complex128)
