"""Closed-form runtime and memory models for classical and quantum sampling.

All rates are operations (or samples) per second, times are seconds and a
year is 8766 hours.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

HOURS_PER_YEAR = 8766.0
SECONDS_PER_YEAR = HOURS_PER_YEAR * 3600
SECONDS_PER_DAY = 86400.0
FUGAKU_CORES = 7_630_848


class CostError(ValueError):
    pass


@dataclass(frozen=True)
class CostConstants:
    """Machine constants.

    ``C_SA`` and ``C_SFA`` are fitted throughput constants (ops/s), ``C_QC`` is
    the quantum sampling rate (samples/s).  ``path_ref_seconds`` is the
    measured single-thread time of one SFA path on ``path_ref_qubits`` qubits
    per side; it scales as ``2^(n_side - path_ref_qubits)``.
    """

    C_SA: float = 0.015e6 * 1e9
    C_SFA: float = 3.3e6 * 1e9
    C_QC: float = 1e6 / 230
    B: float = 0.24
    threads_per_core: int = 2
    cores: int = FUGAKU_CORES
    memory_bytes: float = 3e15
    sfa_cores: float = 1e6
    path_ref_seconds: float = 19560 / 2048
    path_ref_qubits: int = 28
    tn_ref_flops: float = 6.66e18
    tn_ref_seconds: float = 833.75

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise CostError(f"{k} must be positive, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = CostConstants()


def _check_f(F: float) -> None:
    if not 0 < F <= 1:
        raise CostError(f"fidelity must lie in (0, 1], got {F}")


# ---- Schroedinger ---------------------------------------------------------------------

@dataclass(frozen=True)
class SaCost:
    seconds: float
    memory_bytes: float
    feasible: bool


def sa_memory(n: int) -> float:
    return 2.0 ** (n + 1)


def t_sa(n: int, m: int, c: CostConstants = DEFAULT) -> SaCost:
    """``T = m n 2^n / C_SA``; infeasible when ``2^(n+1)`` exceeds memory."""
    if n < 1 or m < 0:
        raise CostError("need n >= 1 and m >= 0")
    mem = sa_memory(n)
    return SaCost(m * n * 2.0**n / c.C_SA, mem, mem <= c.memory_bytes)


def max_sa_qubits(c: CostConstants = DEFAULT) -> int:
    return int(math.floor(math.log2(c.memory_bytes))) - 1


# ---- Schroedinger-Feynman ---------------------------------------------------------------

@dataclass(frozen=True)
class SfaCost:
    seconds: float
    p: int
    memory_per_path: float
    total_memory: float
    feasible: bool


def sfa_memory_per_path(n: int, p: int) -> float:
    return 2 * p * 2.0 ** (n / p)


def sfa_time(n: int, m: int, F: float, p: int, c: CostConstants = DEFAULT) -> float:
    """``C^-1 2^(k p B m sqrt n) F (p 2^(n/p) + min(F^-2, 2^n))`` with ``k = 1/2 + 1/p``."""
    k = 0.5 + 1.0 / p
    log2_paths = k * p * c.B * m * math.sqrt(n)
    work = p * 2.0 ** (n / p) + min(F**-2, 2.0**n)
    log2_t = log2_paths + math.log2(F * work / c.C_SFA)
    return 2.0**log2_t if log2_t < 1020 else math.inf


def t_sfa(n: int, m: int, F: float, p: Optional[int] = None, c: CostConstants = DEFAULT) -> SfaCost:
    """SFA runtime; with ``p=None`` the fastest memory-feasible patch count.

    The footprint of ``sfa_cores`` concurrent paths, ``sfa_cores * 2p 2^(n/p)``,
    must fit in ``memory_bytes``.  If no ``p`` fits, the least-memory choice
    is returned with ``feasible=False``.
    """
    _check_f(F)
    if n < 2:
        raise CostError("need n >= 2")

    def build(q):
        mem = sfa_memory_per_path(n, q)
        tot = c.sfa_cores * mem
        return SfaCost(sfa_time(n, m, F, q, c), q, mem, tot, tot <= c.memory_bytes)

    if p is not None:
        if p < 2:
            raise CostError("need p >= 2")
        return build(p)
    options = [build(q) for q in range(2, n + 1)]
    feasible = [o for o in options if o.feasible]
    if feasible:
        return min(feasible, key=lambda o: (o.seconds, o.p))
    return min(options, key=lambda o: (o.total_memory, o.p))


def sfa_path_seconds(total_paths: int, F: float, n_side: int, c: CostConstants = DEFAULT) -> dict:
    """Project the cost of ``F * total_paths`` SFA paths with ``n_side`` qubits per side."""
    _check_f(F)
    per_path = c.path_ref_seconds * 2.0 ** (n_side - c.path_ref_qubits)
    thread_seconds = float(total_paths) * F * per_path
    hours = thread_seconds / 3600 / c.threads_per_core
    return {
        "paths": float(total_paths) * F,
        "seconds_per_path": per_path,
        "core_hours": hours,
        "years": calendar_years(hours, c.cores),
    }


# ---- quantum ------------------------------------------------------------------------------

def t_quantum(F: float, c: CostConstants = DEFAULT) -> float:
    """``1 / (C_QC F^2)``: time to draw the ``F^-2`` samples needed for sigma <= F."""
    _check_f(F)
    return 1.0 / (c.C_QC * F * F)


# ---- core-hour accounting --------------------------------------------------------------------

def sfa_core_hours(n_runs: float, F: float, t_run_seconds: float, threads_per_core: float = 2) -> float:
    if min(n_runs, F, t_run_seconds, threads_per_core) <= 0:
        raise CostError("all arguments must be positive")
    return n_runs * F * t_run_seconds / 3600 / threads_per_core


def calendar_years(core_hours: float, cores: float = FUGAKU_CORES) -> float:
    return core_hours / (cores * HOURS_PER_YEAR)


@dataclass(frozen=True)
class TableRow:
    n: int
    m: int
    paths: str
    fidelity: float
    core_hours: float
    years: float
    quoted_years: float

    @property
    def relative_error(self) -> float:
        return abs(self.years - self.quoted_years) / self.quoted_years


def table_s3(c: CostConstants = DEFAULT) -> List[TableRow]:
    """SFA run times on ``c.cores`` cores for the three reference circuits.

    The balanced 56-qubit row is computed from its run count and the measured
    time per prefix run; the other two rows start from their quoted core-hours.
    """
    balanced = sfa_core_hours(4**34 * 2, 6.62e-4, 19560, c.threads_per_core)
    rows = [
        (53, "4^31*2^4", 2.24e-3, 8.90e13, 1332),
        (56, "4^38*2^4 (balanced)", 6.62e-4, balanced, 15_887_738),
        (56, "4^35*2^6 (imbalanced)", 6.62e-4, 5.76e17, 8_612_623),
    ]
    return [TableRow(n, 20, paths, f, h, calendar_years(h, c.cores), q) for n, paths, f, h, q in rows]


# ---- imbalanced gates --------------------------------------------------------------------------

def _group(values: Sequence[float], tol: float = 1e-12) -> List[Tuple[float, int]]:
    """Distinct positive values (descending) with multiplicities."""
    out: List[Tuple[float, int]] = []
    for v in sorted((float(v) for v in values), reverse=True):
        if v <= tol:
            continue
        if out and abs(out[-1][0] - v) <= tol * max(1.0, v):
            out[-1] = (out[-1][0], out[-1][1] + 1)
        else:
            out.append((v, 1))
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def top_paths_needed(weights_per_gate: Sequence[float], g: int, F: float) -> int:
    """Smallest ``S`` whose top ``S`` path weights sum to at least ``F 4^g``.

    Each path picks one of the per-gate weights for each of ``g`` identical
    gates, so a path weight only depends on how many times each distinct
    value is picked.  Classes are enumerated with multinomial counts.
    """
    _check_f(F)
    if g < 1:
        raise CostError("need g >= 1")
    groups = _group(weights_per_gate)
    norm = sum(v * k for v, k in groups)
    logs = [math.log(v / norm * 4) for v, _ in groups]
    classes = []
    for ks in _compositions(g, len(groups)):
        logw = sum(k * lv for k, lv in zip(ks, logs))
        count = math.factorial(g)
        for k in ks:
            count //= math.factorial(k)
        for k, (_, mult) in zip(ks, groups):
            count *= mult**k
        classes.append((logw, count))
    classes.sort(key=lambda t: -t[0])
    # Work in units of the target so the sums stay O(1).
    log_target = math.log(F) + g * math.log(4)
    need = 1.0
    s = 0
    for logw, count in classes:
        w = math.exp(logw - log_target)
        if count * w >= need * (1 - 1e-12):
            return s + max(1, math.ceil(need / w * (1 - 1e-12)))
        need -= count * w
        s += count
    return s


def imbalanced_weights(delta_theta: float, phi: float) -> np.ndarray:
    """Squared Schmidt values of the gate at ``theta = pi/2 + delta_theta``."""
    from .sfa import closed_form_values

    return closed_form_values(math.pi / 2 + delta_theta, phi) ** 2


def imbalanced_speedup(delta_theta: float, phi: float, g: int, F: float) -> float:
    """Paths needed with balanced gates, ``ceil(F 4^g)``, over the top-``S`` count.

    Balanced gates give exactly 1.  Any other weight vector majorises the
    uniform one, so the ratio is never below 1.
    """
    S = top_paths_needed(imbalanced_weights(delta_theta, phi), g, F)
    log_balanced = math.log(F) + g * math.log(4)
    if log_balanced < 700:
        return math.ceil(math.exp(log_balanced) * (1 - 1e-12)) / S
    return math.exp(log_balanced - math.log(S))


# ---- tensor networks ---------------------------------------------------------------------------

def tn_cost_scaling(per_sample_flops: float, n_samples: float, F: float) -> float:
    if min(per_sample_flops, n_samples, F) <= 0:
        raise CostError("all arguments must be positive")
    return per_sample_flops * n_samples * F


def summit_extrapolate(total_flops: float, c: CostConstants = DEFAULT) -> float:
    """Wall-clock seconds, scaling a reference contraction time linearly in flops."""
    if total_flops <= 0:
        raise CostError("total_flops must be positive")
    return total_flops / c.tn_ref_flops * c.tn_ref_seconds


# ---- advantage region ----------------------------------------------------------------------------

def gate_counts(n: int, m: int, cols: int = 6, sequence: str = "ABCDCDAB") -> Tuple[int, int]:
    """Single- and two-qubit gate counts of an ``m``-cycle circuit on ``n`` qubits.

    The device is the first ``n`` sites of a staggered lattice ``cols`` wide.
    """
    from .lattice import LatticeTopology, PatternSet, restrict_patterns, subset_topology

    rows = -(-n // cols)
    full = LatticeTopology.staggered(rows, cols)
    topo = subset_topology(full, full.qubits[:n])
    patterns = restrict_patterns(PatternSet.default(full), topo)
    two = sum(len(patterns[sequence[k % len(sequence)]]) for k in range(m))
    return n * (m + 1), two


def circuit_fidelity(n: int, m: int, e1: float, e2: float, er: float, **kw) -> float:
    n1, n2 = gate_counts(n, m, **kw)
    return math.exp(n1 * math.log1p(-e1) + n2 * math.log1p(-e2) + n * math.log1p(-er))


LABELS = ("SA", "SFA", "Quantum")


@dataclass
class AdvantageGrid:
    n_values: List[int]
    m_values: List[int]
    labels: List[List[str]]
    fidelity: List[List[float]]
    t_sa: List[List[float]]
    t_sfa: List[List[float]]
    t_quantum: List[List[float]]

    def quantum_cells(self) -> set:
        return {
            (n, m)
            for i, n in enumerate(self.n_values)
            for j, m in enumerate(self.m_values)
            if self.labels[i][j] == "Quantum"
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "F", "t_sa", "t_sfa", "t_quantum", "label"])
        for i, n in enumerate(self.n_values):
            for j, m in enumerate(self.m_values):
                w.writerow([n, m] + [format(x, ".17g") for x in (
                    self.fidelity[i][j], self.t_sa[i][j], self.t_sfa[i][j], self.t_quantum[i][j]
                )] + [self.labels[i][j]])
        return buf.getvalue()


def advantage_region(
    n_range: Iterable[int],
    m_range: Iterable[int],
    e1: float,
    e2: float,
    er: float,
    c: CostConstants = DEFAULT,
) -> AdvantageGrid:
    """Fastest method per ``(n, m)``; infeasible classical methods get ``inf``."""
    ns, ms = list(n_range), list(m_range)
    if not ns or not ms:
        raise CostError("ranges must be nonempty")
    grid = AdvantageGrid(ns, ms, [], [], [], [], [])
    for n in ns:
        row = {k: [] for k in ("labels", "fidelity", "t_sa", "t_sfa", "t_quantum")}
        for m in ms:
            F = circuit_fidelity(n, m, e1, e2, er)
            sa = t_sa(n, m, c)
            sfa = t_sfa(n, m, F, None, c)
            times = (
                sa.seconds if sa.feasible else math.inf,
                sfa.seconds if sfa.feasible else math.inf,
                t_quantum(F, c),
            )
            row["labels"].append(LABELS[int(np.argmin(times))])
            row["fidelity"].append(F)
            row["t_sa"].append(times[0])
            row["t_sfa"].append(times[1])
            row["t_quantum"].append(times[2])
        for k, v in row.items():
            getattr(grid, k).append(v)
    return grid
