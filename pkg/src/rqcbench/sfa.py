"""Schrödinger-Feynman simulation over a two-way cut.

Each cross-cut gate is written as an operator-Schmidt sum
``U = sum_i lambda_i A_i (x) B_i`` with ``tr(A_i^dag A_j) = tr(B_i^dag B_j) =
delta_ij``, so ``sum_i lambda_i^2 = 4``.  A path picks one term per cross
gate; its amplitude is the product of the two patch amplitudes and its
weight is ``W = prod lambda^2``.  Summing ``W / 4^g`` over any set of paths
gives the fidelity that set captures.

Paths are numbered lexicographically with the first cross gate as the most
significant digit and terms ordered by decreasing ``lambda``.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import prod
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .circuit import Circuit, Cut, Layer, cross_gates
from .gates import SWAP, CPhaseParams, Gate, ISwapLikeParams
from .statevec import DTYPES, apply_matrix, bitstrings_to_indices, check_memory

_S2 = 1 / np.sqrt(2)
RANK_TOL = 1e-12
BOUNDARY_TOL = 1e-12
MAX_BATCH_AMPS = 1 << 20
MAX_WEIGHT_TABLE = 1 << 26


class SfaError(ValueError):
    pass


# ---- operator-Schmidt decomposition -------------------------------------------------

@dataclass
class SchmidtDecomposition:
    values: np.ndarray  # (r,) decreasing
    ops_a: np.ndarray  # (r, 2, 2), acts on the first target
    ops_b: np.ndarray  # (r, 2, 2), acts on the second target

    @property
    def rank(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return sum(v * np.kron(a, b) for v, a, b in zip(self.values, self.ops_a, self.ops_b))

    def weights(self) -> np.ndarray:
        return self.values**2


def _diag_sector(d: Sequence[complex]):
    """Schmidt terms of diag(d00, d01, d10, d11) in the normalised {I, Z} basis."""
    d00, d01, d10, d11 = d
    k = 0.5 * np.array(
        [[d00 + d01 + d10 + d11, d00 - d01 + d10 - d11], [d00 + d01 - d10 - d11, d00 - d01 - d10 + d11]]
    )
    w, s, vh = np.linalg.svd(k)
    basis = np.array([np.eye(2), np.diag([1.0, -1.0])]) * _S2
    ops_a = np.einsum("mk,mij->kij", w, basis)
    ops_b = np.einsum("km,mij->kij", vh, basis)
    return list(s), list(ops_a), list(ops_b)


def _phase(x: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * x)])


def schmidt_iswap_like(p: ISwapLikeParams, tol: float = RANK_TOL) -> SchmidtDecomposition:
    c, s = np.cos(p.theta), np.sin(p.theta)
    e = np.exp(-1j * p.phi)
    vals, ops_a, ops_b = _diag_sector((1, c, c, e))
    x = np.array([[0, 1], [1, 0]], dtype=complex) * _S2
    y = np.array([[0, -1j], [1j, 0]], dtype=complex) * _S2
    sgn = 1.0 if s >= 0 else -1.0
    for op in (x, y):
        vals.append(abs(s))
        ops_a.append(op)
        ops_b.append(-1j * sgn * op)
    pa, pb, pc, pd = (_phase(t) for t in p.local_phases())
    ops_a = [pa @ o @ pc for o in ops_a]
    ops_b = [pb @ o @ pd for o in ops_b]
    return _finish(vals, ops_a, ops_b, tol)


def _finish(vals, ops_a, ops_b, tol) -> SchmidtDecomposition:
    order = sorted(range(len(vals)), key=lambda i: (-vals[i], i))
    keep = [i for i in order if vals[i] > tol]
    return SchmidtDecomposition(
        np.array([vals[i] for i in keep], dtype=float),
        np.array([ops_a[i] for i in keep], dtype=complex).reshape(-1, 2, 2),
        np.array([ops_b[i] for i in keep], dtype=complex).reshape(-1, 2, 2),
    )


def schmidt_decompose(gate: Union[Gate, ISwapLikeParams, CPhaseParams], tol: float = RANK_TOL) -> SchmidtDecomposition:
    """Operator-Schmidt decomposition of an iSWAP-like or controlled-phase gate.

    For the iSWAP-like gate the values are ``|sin theta|`` (twice) and
    ``sqrt(1 +/- 2|cos(phi/2) cos theta| + cos^2 theta)``; terms with values
    at or below ``tol`` are dropped.
    """
    if isinstance(gate, Gate):
        gate = gate.params
    if isinstance(gate, ISwapLikeParams):
        return schmidt_iswap_like(gate, tol)
    if isinstance(gate, CPhaseParams):
        vals, a, b = _diag_sector(np.diag(gate.matrix()))
        return _finish(vals, a, b, tol)
    raise TypeError(f"no Schmidt decomposition for {type(gate).__name__}")


def closed_form_values(theta: float, phi: float) -> np.ndarray:
    c = np.cos(theta)
    t = 2 * abs(np.cos(phi / 2) * c)
    return np.sort(np.sqrt(np.maximum([1 + t + c * c, 1 - t + c * c, np.sin(theta) ** 2, np.sin(theta) ** 2], 0)))[::-1]


def svd_values(u: np.ndarray) -> np.ndarray:
    """Operator-Schmidt values by SVD of the realigned 4x4 matrix."""
    r = u.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    return np.linalg.svd(r, compute_uv=False)


# ---- boundary simplification ---------------------------------------------------------

class Boundary(NamedTuple):
    circuit: Circuit
    cross_gates: list
    log: list
    permutation: Tuple[int, ...]  # output bit q of the original = bit permutation[q] of circuit'


def _two_qubit_span(circuit: Circuit):
    first, last = {}, {}
    for li, gi, g in circuit.two_qubit_gates():
        for t in g.targets:
            first.setdefault(t, (li, gi))
            last[t] = (li, gi)
    return first, last


def _is_swap_times_diagonal(g: Gate) -> Optional[np.ndarray]:
    if g.name != "ISwapLike" or abs(np.cos(g.params.theta)) > BOUNDARY_TOL:
        return None
    d = SWAP @ g.matrix()
    if np.abs(d - np.diag(np.diag(d))).max() > BOUNDARY_TOL:
        return None
    return d


def _as_cphase(d: np.ndarray, targets) -> Gate:
    # d[0, 0] is 1 for the iSWAP-like family, so no global phase is lost
    ph = np.angle(np.diag(d))
    pa, pb = ph[2], ph[1]
    return Gate("CPhase", targets, CPhaseParams(float(pa + pb - ph[3]), float(pa), float(pb)))


def simplify_boundary(circuit: Circuit, cut: Cut) -> Boundary:
    """Replace boundary cross iSWAP-like gates by controlled-phase gates.

    A cross gate that is the first two-qubit gate on both of its qubits (a
    start gate) acts, up to a swap that fixes ``|00>``, as a diagonal gate
    once the earlier single-qubit gates of the two qubits are exchanged.  A
    cross gate that is the last two-qubit gate on both qubits (an end gate)
    becomes diagonal once the later single-qubit gates are exchanged; the
    leftover swap is recorded as an output bit permutation.  Only gates with
    ``cos(theta) = 0`` qualify.
    """
    first, last = _two_qubit_span(circuit)
    layers = [list(l.gates) for l in circuit.layers]
    perm = list(range(circuit.n_qubits))
    log = []
    done = set()
    for kind in ("start", "end"):
        for li, gi, g in cross_gates(circuit, cut):
            a, b = g.targets
            span = first if kind == "start" else last
            if (li, gi) in done or span[a] != (li, gi) or span[b] != (li, gi):
                continue
            d = _is_swap_times_diagonal(g)
            if d is None:
                continue
            if kind == "start":
                layers[li][gi] = _as_cphase(SWAP @ d @ SWAP, (a, b))
                rng = range(0, li)
            else:
                layers[li][gi] = _as_cphase(d, (a, b))
                rng = range(li + 1, len(layers))
                perm[a], perm[b] = perm[b], perm[a]
            swap = {a: b, b: a}
            for lj in rng:
                layers[lj] = [
                    h.retarget([swap.get(t, t) for t in h.targets]) if h.arity == 1 else h for h in layers[lj]
                ]
            done.add((li, gi))
            log.append({"kind": kind, "layer": li, "targets": [a, b]})
    new_layers = tuple(Layer(l.kind, tuple(gs), l.pattern) for l, gs in zip(circuit.layers, layers))
    out = circuit.with_layers(new_layers)
    return Boundary(out, cross_gates(out, cut), log, tuple(perm))


def path_count(circuit: Circuit, cut: Cut, simplify: bool = True) -> Tuple[int, List[int]]:
    """Number of paths and the Schmidt rank of each cross gate, in circuit order."""
    gates = simplify_boundary(circuit, cut).cross_gates if simplify else cross_gates(circuit, cut)
    ranks = [schmidt_decompose(g).rank for _, _, g in gates]
    return prod(ranks), ranks


# ---- prefix runs --------------------------------------------------------------------

@dataclass(frozen=True)
class RunDescriptor:
    id: int
    prefix_indices: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {"id": self.id, "prefix_indices": list(self.prefix_indices)}


def _ranks(items) -> List[int]:
    out = []
    for x in items:
        if isinstance(x, (int, np.integer)):
            out.append(int(x))
        elif isinstance(x, SchmidtDecomposition):
            out.append(x.rank)
        else:
            g = x[2] if isinstance(x, tuple) else x
            out.append(schmidt_decompose(g).rank)
    return out


def count_prefix_runs(ranks: Sequence, prefix_len: int) -> int:
    r = _ranks(ranks)
    if not 0 <= prefix_len <= len(r):
        raise SfaError(f"prefix_len {prefix_len} outside 0..{len(r)}")
    return prod(r[:prefix_len])


def enumerate_prefix_runs(ranks: Sequence, prefix_len: int) -> Iterator[RunDescriptor]:
    """Runs fixing the Schmidt indices of the first ``prefix_len`` cross gates.

    Accepts ranks, decompositions or cross-gate records.  Runs are
    disjoint, cover every path, and come in lexicographic order.
    """
    r = _ranks(ranks)
    count_prefix_runs(r, prefix_len)
    for i, idx in enumerate(itertools.product(*(range(k) for k in r[:prefix_len]))):
        yield RunDescriptor(i, tuple(idx))


# ---- path sums ----------------------------------------------------------------------

@dataclass(frozen=True)
class Full:
    pass


@dataclass(frozen=True)
class TopFidelity:
    fidelity: float


@dataclass(frozen=True)
class PathSubset:
    paths: Tuple[int, ...]  # lexicographic path numbers

    def __init__(self, paths):
        object.__setattr__(self, "paths", tuple(int(p) for p in paths))


Mode = Union[Full, TopFidelity, PathSubset]


@dataclass
class SfaResult:
    amplitudes: np.ndarray
    fidelity: float  # sum of W / 4^g over the paths used
    n_paths: int
    ranks: List[int]
    log: list = field(default_factory=list)


@dataclass
class _Plan:
    n1: int
    n2: int
    side1: List[int]
    side2: List[int]
    segs1: list  # per segment: list of (matrix, axes)
    segs2: list
    decomps: List[SchmidtDecomposition]
    cross_axes: List[Tuple[int, int, bool]]  # (axis side1, axis side2, first target on side1)
    perm: Tuple[int, ...]
    log: list


def _plan(circuit: Circuit, cut: Cut, simplify: bool) -> _Plan:
    cut.check(circuit.n_qubits)
    if simplify:
        b = simplify_boundary(circuit, cut)
        circ, perm, log = b.circuit, b.permutation, b.log
    else:
        circ, perm, log = circuit, tuple(range(circuit.n_qubits)), []
    side1, side2 = sorted(cut.side1), sorted(cut.side2)
    n1, n2 = len(side1), len(side2)
    loc = {q: (1, n1 - 1 - j) for j, q in enumerate(side1)}
    loc.update({q: (2, n2 - 1 - j) for j, q in enumerate(side2)})
    segs1, segs2 = [[]], [[]]
    decomps, cross_axes = [], []
    for _, _, g in circ.gates():
        sides = [loc[t][0] for t in g.targets]
        if len(set(sides)) == 1:
            (segs1 if sides[0] == 1 else segs2)[-1].append((g.matrix(), [loc[t][1] for t in g.targets]))
        else:
            decomps.append(schmidt_decompose(g))
            a, b = g.targets
            if sides[0] == 1:
                cross_axes.append((loc[a][1], loc[b][1], True))
            else:
                cross_axes.append((loc[b][1], loc[a][1], False))
            segs1.append([])
            segs2.append([])
    return _Plan(n1, n2, side1, side2, segs1, segs2, decomps, cross_axes, perm, log)


def _apply_seg(psi, seg):
    for mat, axes in seg:
        psi = apply_matrix(psi, mat, axes)
    return psi


class _Walker:
    """Depth-first path expansion with breadth-first batches near the leaves."""

    def __init__(self, plan: _Plan, q1, q2, dtype):
        self.p = plan
        self.q1, self.q2 = q1, q2  # query indices per side, or None for all
        self.dtype = dtype
        g = len(plan.decomps)
        self.ranks = [d.rank for d in plan.decomps]
        # number of paths below each level
        self.below = [prod(self.ranks[k:]) for k in range(g + 1)]
        self.max_cols = max(1, MAX_BATCH_AMPS >> max(plan.n1, plan.n2))

    def _cross(self, psi1, psi2, k, term):
        """Apply term ``term`` of cross gate ``k`` to every batch column."""
        d = self.p.decomps[k]
        ax1, ax2, first_on_1 = self.p.cross_axes[k]
        a, b = (d.ops_a[term], d.ops_b[term]) if first_on_1 else (d.ops_b[term], d.ops_a[term])
        return apply_matrix(psi1, d.values[term] * a, [ax1]), apply_matrix(psi2, b, [ax2])

    def leaf(self, psi1, psi2):
        b = psi1.shape[-1]
        f1 = psi1.reshape(-1, b)
        f2 = psi2.reshape(-1, b)
        if self.q1 is None:
            return f1 @ f2.T
        return np.sum(f1[self.q1] * f2[self.q2], axis=1)

    def expand(self, k, psi1, psi2, prefixes, selected):
        """Children of every batch column at cross gate ``k``, in path order."""
        r = self.ranks[k]
        span = self.below[k + 1]
        parts1, parts2, nums = [], [], []
        for i in range(r):
            child = prefixes * r + i
            if selected is not None:
                pos = np.searchsorted(selected, child * span)
                keep = (pos < len(selected)) & (selected[np.minimum(pos, len(selected) - 1)] < (child + 1) * span)
                if not keep.any():
                    continue
                o1, o2 = self._cross(psi1[..., keep], psi2[..., keep], k, i)
                child = child[keep]
            else:
                o1, o2 = self._cross(psi1, psi2, k, i)
            parts1.append(o1)
            parts2.append(o2)
            nums.append(child)
        if not nums:
            return None, None, None
        nums = np.concatenate(nums)
        order = np.argsort(nums, kind="stable")
        b1 = np.concatenate(parts1, axis=-1)[..., order]
        b2 = np.concatenate(parts2, axis=-1)[..., order]
        return _apply_seg(b1, self.p.segs1[k + 1]), _apply_seg(b2, self.p.segs2[k + 1]), nums[order]

    def walk(self, k, psi1, psi2, prefixes, selected):
        """Sum over all selected paths below ``prefixes`` (one per batch column)."""
        if k == len(self.ranks):
            return self.leaf(psi1, psi2), len(prefixes)
        step = max(1, self.max_cols // self.ranks[k])
        total, count = None, 0
        for lo in range(0, len(prefixes), step):
            sl = slice(lo, lo + step)
            b1, b2, nums = self.expand(k, psi1[..., sl], psi2[..., sl], prefixes[sl], selected)
            if nums is None:
                continue
            part, cnt = self.walk(k + 1, b1, b2, nums, selected)
            if part is not None:
                total = part if total is None else total + part
                count += cnt
        return total, count


def path_weights(decomps: Sequence[SchmidtDecomposition]) -> np.ndarray:
    w = np.ones(1)
    for d in decomps:
        w = np.kron(w, d.weights())
    return w


def _top_paths(decomps, fidelity: float) -> Tuple[np.ndarray, float]:
    total = prod(d.rank for d in decomps)
    if total > MAX_WEIGHT_TABLE:
        raise SfaError(f"{total} paths is too many to rank individually")
    w = path_weights(decomps)
    norm = 4.0 ** len(decomps)
    order = np.argsort(-w, kind="stable")
    csum = np.cumsum(w[order]) / norm
    s = int(np.searchsorted(csum, fidelity - 1e-12)) + 1
    s = min(s, total)
    return np.sort(order[:s]), float(csum[s - 1])


def sfa_amplitudes(
    circuit: Circuit,
    cut: Cut,
    bitstrings: Optional[Sequence[str]] = None,
    mode: Mode = Full(),
    simplify: bool = True,
    prefix: Optional[Sequence[int]] = None,
    precision: str = "double",
    workers: int = 1,
    memory_cap_bytes: Optional[int] = None,
    task_depth: int = 2,
) -> SfaResult:
    """Amplitudes of ``bitstrings`` (all basis states if None) by path summation.

    ``prefix`` restricts the sum to one prefix run.  Work is split into
    fixed tasks (the paths sharing the first ``task_depth`` indices) whose
    partial sums are added in task order, so the result does not depend on
    ``workers``.
    """
    n = circuit.n_qubits
    plan = _plan(circuit, cut, simplify)
    for m in (plan.n1, plan.n2):
        check_memory(m, precision, memory_cap_bytes)
    decomps = plan.decomps
    ranks = [d.rank for d in decomps]
    g = len(decomps)
    norm = 4.0**g

    if bitstrings is None:
        q1 = q2 = None
        if n > 26:
            raise SfaError("refusing to build a full amplitude vector above 26 qubits")
    else:
        idx = bitstrings_to_indices(bitstrings, n)
        # map original output bits through the recorded permutation
        bits = [(idx >> q) & 1 for q in range(n)]
        q1 = sum(bits[plan.perm[q]] << j for j, q in enumerate(plan.side1)) if plan.side1 else np.zeros_like(idx)
        q2 = sum(bits[plan.perm[q]] << j for j, q in enumerate(plan.side2)) if plan.side2 else np.zeros_like(idx)

    selected = None
    if isinstance(mode, TopFidelity) and mode.fidelity < 1 - 1e-12:
        selected, _ = _top_paths(decomps, mode.fidelity)
    elif isinstance(mode, PathSubset):
        selected = np.unique(np.array(mode.paths, dtype=np.int64))
        if selected.size == 0:
            raise SfaError("empty path set")
        if selected[0] < 0 or selected[-1] >= prod(ranks):
            raise SfaError("path number out of range")
    if prefix is not None:
        prefix = tuple(prefix)
        if len(prefix) > g or any(not 0 <= i < r for i, r in zip(prefix, ranks)):
            raise SfaError(f"bad prefix {prefix}")
        num = 0
        for i, r in zip(prefix, ranks):
            num = num * r + i
        span = prod(ranks[len(prefix):])
        lo, hi = num * span, (num + 1) * span
        if selected is None:
            selected = np.arange(lo, hi, dtype=np.int64)
        else:
            selected = selected[(selected >= lo) & (selected < hi)]
        if selected.size == 0:
            raise SfaError("no paths in this prefix run")

    dtype = DTYPES[precision]
    walker = _Walker(plan, q1, q2, dtype)

    def zero(m):
        z = np.zeros((2,) * m + (1,), dtype=dtype)
        z[(0,) * m] = 1
        return z

    root1 = _apply_seg(zero(plan.n1), plan.segs1[0])
    root2 = _apply_seg(zero(plan.n2), plan.segs2[0])

    depth = min(task_depth, g)
    tasks = list(itertools.product(*(range(r) for r in ranks[:depth])))

    def task(t):
        psi1, psi2 = root1, root2
        nums = np.zeros(1, dtype=np.int64)
        for k, i in enumerate(t):
            psi1, psi2, nums = walker.expand(k, psi1, psi2, nums, selected)
            if nums is None:
                return None, 0
            keep = nums % ranks[k] == i
            if not keep.any():
                return None, 0
            psi1, psi2, nums = psi1[..., keep], psi2[..., keep], nums[keep]
        return walker.walk(len(t), psi1, psi2, nums, selected)

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(task, tasks))
    else:
        parts = [task(t) for t in tasks]

    total, count = None, 0
    for part, cnt in parts:
        if part is not None:
            total = part if total is None else total + part
            count += cnt
    if total is None:
        raise SfaError("empty path set")

    if selected is None:
        fid = 1.0
    else:
        fid = float(np.sum(path_weights(decomps)[selected]) / norm) if g else 1.0

    if bitstrings is None:
        amps = _full_vector(total, plan, n)
    else:
        amps = np.asarray(total).reshape(-1)
    return SfaResult(amps, fid, count, ranks, plan.log)


def _full_vector(mat: np.ndarray, plan: _Plan, n: int) -> np.ndarray:
    """Scatter the (2^n1, 2^n2) patch product into original basis order."""
    i1 = np.arange(2**plan.n1)
    i2 = np.arange(2**plan.n2)
    full1 = np.zeros_like(i1)
    for j, q in enumerate(plan.side1):
        full1 |= ((i1 >> j) & 1) << q
    full2 = np.zeros_like(i2)
    for j, q in enumerate(plan.side2):
        full2 |= ((i2 >> j) & 1) << q
    idx = (full1[:, None] | full2[None, :]).reshape(-1)
    # idx is in circuit' bit order; undo the output permutation
    inv = np.zeros_like(idx)
    for q in range(n):
        inv |= ((idx >> plan.perm[q]) & 1) << q
    out = np.zeros(2**n, dtype=mat.dtype)
    out[inv] = mat.reshape(-1)
    return out


# ---- manifests and partial results ---------------------------------------------------

def run_manifest(circuit: Circuit, cut: Cut, prefix_len: int, simplify: bool = True) -> dict:
    total, ranks = path_count(circuit, cut, simplify)
    runs = [r.to_dict() for r in enumerate_prefix_runs(ranks, prefix_len)]
    return {
        "circuit_hash": circuit.digest(),
        "cut": cut.to_dict(),
        "simplify": simplify,
        "prefix_len": prefix_len,
        "ranks": ranks,
        "n_paths": total,
        "runs": runs,
    }


def merge_partials(parts: Sequence[Tuple[dict, np.ndarray]]) -> Tuple[np.ndarray, dict]:
    """Sum partial amplitude arrays in increasing run id.

    Each part is ``(header, amplitudes)``; headers must agree on the
    circuit hash and carry distinct ``run_id`` values.
    """
    if not parts:
        raise SfaError("nothing to merge")
    parts = sorted(parts, key=lambda p: p[0]["run_id"])
    ids = [p[0]["run_id"] for p in parts]
    if len(set(ids)) != len(ids):
        raise SfaError("duplicate run ids")
    hashes = {p[0].get("circuit_hash") for p in parts}
    if len(hashes) != 1:
        raise SfaError("partials come from different circuits")
    total = parts[0][1].astype(np.complex128)
    fid = parts[0][0].get("fidelity", 0.0)
    for head, amps in parts[1:]:
        if amps.shape != total.shape:
            raise SfaError("partials have different lengths")
        total = total + amps
        fid += head.get("fidelity", 0.0)
    return total, {"circuit_hash": hashes.pop(), "run_ids": ids, "fidelity": fid}
