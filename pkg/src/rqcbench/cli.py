"""Command-line interface.

Every subcommand writes a JSON report (stdout unless ``--report``) holding
the tool version, SHA-256 hashes of the input files, the seed and the
resolved configuration.  Output paths and the worker count are left out,
so reruns with the same inputs give byte-identical reports.

Exit codes: 0 ok, 1 internal error, 2 usage or input error, 3 memory refusal.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import secrets
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import cost as costmod
from .circuit import Circuit, CircuitError, CircuitVariant, Cut, generate_rqc, validate
from .cutopt import CutSearchError, cutplan_report, search_optimal_cut
from .lattice import LatticeTopology, PatternSet, zuchongzhi_56
from .qcis import QcisError, emit_qcis, parse_qcis
from .sfa import Full, PathSubset, SfaError, TopFidelity, enumerate_prefix_runs, merge_partials, path_count, run_manifest, sfa_amplitudes
from .statevec import (
    MemoryCapError,
    NoiseModel,
    bitstrings_to_indices,
    indices_to_bitstrings,
    read_amplitudes,
    read_samples,
    run,
    sample_indices,
    noisy_run,
    write_amplitudes,
    write_samples,
)
from .xeb import XebError, XebSample, combine_instances, FidelityEstimate, xeb_report

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_MEMORY = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---- report helpers ---------------------------------------------------------------------

_FLOAT_TOKEN = "\x00f{}\x00"


def _tokenise(obj):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return _FLOAT_TOKEN.format("Infinity" if x > 0 else "-Infinity" if x < 0 else "NaN")
        return _FLOAT_TOKEN.format(format(x, ".17g"))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _tokenise(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tokenise(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    text = json.dumps(_tokenise(obj), sort_keys=True, indent=1)
    return re.sub(r'"\\u0000f([^"\\]*)\\u0000"', r"\1", text) + "\n"


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _emit(args, body: dict, inputs: Dict[str, str], config: dict) -> None:
    report = {
        "tool": "rqcbench",
        "version": __version__,
        "command": args.command,
        "inputs": {k: file_hash(v) for k, v in sorted(inputs.items())},
        "config": config,
        **body,
    }
    text = dumps(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(32)


def _workers(args) -> int:
    return args.workers or os.cpu_count() or 1


def _exists(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} file {path} not found")
    return p


def load_circuit(path) -> Circuit:
    p = _exists(path, "circuit")
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".qcis":
        return parse_qcis(text)
    return Circuit.from_json(text)


def load_cut(path, n: int) -> Cut:
    d = json.loads(_exists(path, "cut").read_text(encoding="utf-8"))
    if isinstance(d, list):
        return Cut.from_side(d, n)
    cut = Cut.from_dict(d)
    cut.check(n)
    return cut


def _floats(text: str, k: int, what: str) -> List[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be {k} comma-separated numbers") from None
    if len(vals) != k:
        raise UsageError(f"{what} must be {k} comma-separated numbers")
    return vals


def _range(text: str) -> range:
    parts = text.split(":")
    try:
        a, b, *s = (int(x) for x in parts)
    except ValueError:
        raise UsageError(f"bad range {text!r}; use start:stop[:step]") from None
    return range(a, b + 1, s[0] if s else 1)


# ---- subcommands ------------------------------------------------------------------------------

def cmd_generate(args) -> None:
    if args.device == "zuchongzhi56":
        topo, patterns, meta = zuchongzhi_56()
    else:
        if not (args.rows and args.cols):
            raise UsageError("give --rows and --cols, or --device")
        topo = LatticeTopology.staggered(args.rows, args.cols)
        patterns, meta = PatternSet.default(topo), None
    n = topo.n_qubits
    inputs = {}
    cut = None
    if args.cut:
        inputs["cut"] = args.cut
        cut = load_cut(args.cut, n)
    if args.variant != "full" and cut is None:
        raise UsageError(f"--variant {args.variant} needs --cut")
    try:
        variant = CircuitVariant(args.variant, args.elided_cycles, cut)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    seed = _seed(args)
    circ = generate_rqc(topo, patterns, args.cycles, seed, variant)
    problems = validate(circ)
    if problems:
        raise UsageError("generated circuit failed validation: " + "; ".join(v.message for v in problems))
    Path(args.output).write_text(circ.to_json(), encoding="utf-8")
    if args.qcis:
        Path(args.qcis).write_text(emit_qcis(circ), encoding="utf-8")
    config = {
        "rows": topo.rows, "cols": topo.cols, "device": args.device, "cycles": args.cycles,
        "variant": variant.to_dict(), "seed": seed,
    }
    body = {"seed": seed, "n_qubits": n, "circuit_hash": circ.digest(),
            "n_two_qubit_gates": len(circ.two_qubit_gates())}
    if meta is not None:
        body["device_verified"] = meta["verified"]
    _emit(args, body, inputs, config)


def _default_cut(circ: Circuit) -> Cut:
    try:
        return search_optimal_cut(circ, circ.n_qubits % 2).cut
    except (CutSearchError, ValueError):
        return Cut.from_side(range(circ.n_qubits // 2), circ.n_qubits)


def cmd_simulate(args) -> None:
    circ = load_circuit(args.circuit)
    inputs = {"circuit": args.circuit}
    bitstrings = None
    if args.bitstrings:
        inputs["bitstrings"] = args.bitstrings
        bitstrings, _ = read_samples(_exists(args.bitstrings, "bitstrings"))
        bitstrings_to_indices(bitstrings, circ.n_qubits)
    workers = _workers(args)
    header = {"circuit_hash": circ.digest(), "precision": args.precision}
    config = {"engine": args.engine, "precision": args.precision}
    body = {"circuit_hash": circ.digest(), "n_qubits": circ.n_qubits}
    if args.engine == "sv":
        config["fuse_width"] = args.fuse_width
        state = run(circ, args.precision, fuse_width=args.fuse_width, workers=workers)
        amps = state.amps
        if bitstrings is not None:
            amps = amps[bitstrings_to_indices(bitstrings, circ.n_qubits)]
        body["norm"] = state.norm()
    else:
        if args.cut:
            inputs["cut"] = args.cut
            cut = load_cut(args.cut, circ.n_qubits)
        else:
            cut = _default_cut(circ)
        if args.mode == "top":
            if args.fidelity is None:
                raise UsageError("--mode top needs --fidelity")
            mode = TopFidelity(args.fidelity)
        elif args.mode == "subset":
            if not args.paths:
                raise UsageError("--mode subset needs --paths")
            mode = PathSubset([int(x) for x in args.paths.split(",")])
        else:
            mode = Full()
        prefix = None
        if args.run_id is not None:
            if args.prefix_len is None:
                raise UsageError("--run-id needs --prefix-len")
            _, ranks = path_count(circ, cut, not args.no_simplify)
            runs = list(enumerate_prefix_runs(ranks, args.prefix_len))
            if not 0 <= args.run_id < len(runs):
                raise UsageError(f"--run-id must be in [0, {len(runs)})")
            prefix = runs[args.run_id].prefix_indices
            header["run_id"] = args.run_id
            config.update(prefix_len=args.prefix_len, run_id=args.run_id)
        res = sfa_amplitudes(circ, cut, bitstrings, mode, simplify=not args.no_simplify,
                             prefix=prefix, precision=args.precision, workers=workers)
        amps = res.amplitudes
        header["fidelity"] = res.fidelity
        config.update(mode=args.mode, fidelity=args.fidelity, simplify=not args.no_simplify, cut=cut.to_dict())
        body.update(fidelity=res.fidelity, n_paths=res.n_paths, ranks=res.ranks, boundary_log=res.log)
    header["bitstrings"] = bitstrings is not None
    if args.output:
        write_amplitudes(args.output, amps, header)
    body["n_amplitudes"] = int(np.asarray(amps).size)
    body["amplitudes_sha256"] = hashlib.sha256(np.ascontiguousarray(amps).tobytes()).hexdigest()
    _emit(args, body, inputs, config)


def cmd_sample(args) -> None:
    circ = load_circuit(args.circuit)
    seed = _seed(args)
    workers = _workers(args)
    config = {"n_samples": args.n_samples, "seed": seed, "precision": args.precision}
    if args.noise:
        e1, e2, er = _floats(args.noise, 3, "--noise")
        try:
            noise = NoiseModel(e1, e2, er)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        idx = noisy_run(circ, noise, seed, args.n_samples, workers, args.precision)
        config["noise"] = {"e1": e1, "e2": e2, "er": er}
    else:
        idx = sample_indices(run(circ, args.precision, workers=workers), args.n_samples, seed)
    bits = indices_to_bitstrings(idx, circ.n_qubits)
    write_samples(args.output, bits, circ.n_qubits, seed, circ.digest())
    body = {
        "seed": seed,
        "circuit_hash": circ.digest(),
        "n_samples": len(bits),
        "samples_sha256": hashlib.sha256("".join(b + "\n" for b in bits).encode()).hexdigest(),
    }
    _emit(args, body, {"circuit": args.circuit}, config)


def _read_probs(path) -> np.ndarray:
    lines = _exists(path, "probability").read_text(encoding="utf-8").split()
    try:
        return np.array([float(x) for x in lines])
    except ValueError:
        raise UsageError(f"{path}: one probability per line expected") from None


def cmd_xeb(args) -> None:
    if args.combine:
        ests = []
        for p in args.combine:
            r = json.loads(_exists(p, "report").read_text(encoding="utf-8"))
            ests.append(FidelityEstimate(r["F"], r["sigma"], r["estimator"], r.get("n_samples")))
        if len({e.estimator for e in ests}) != 1:
            raise UsageError("cannot combine reports from different estimators")
        comb = combine_instances(ests)
        body = {"combined": comb.to_dict(), "instances": [e.to_dict() for e in ests]}
        _emit(args, body, {f"report{i}": p for i, p in enumerate(args.combine)}, {"combine": len(ests)})
        return
    if not args.samples:
        raise UsageError("give --samples (or --combine)")
    bits, _ = read_samples(_exists(args.samples, "samples"))
    if not bits:
        raise UsageError("samples file is empty")
    n = len(bits[0])
    inputs = {"samples": args.samples}
    if args.probs:
        inputs["probs"] = args.probs
        probs = _read_probs(args.probs)
        if probs.size != len(bits):
            raise UsageError("probability file and samples file differ in length")
    elif args.circuit:
        inputs["circuit"] = args.circuit
        circ = load_circuit(args.circuit)
        if circ.n_qubits != n:
            raise UsageError(f"samples have {n} bits, circuit has {circ.n_qubits} qubits")
        state = run(circ, "double", workers=_workers(args))
        probs = np.abs(state.amps[bitstrings_to_indices(bits, n)]) ** 2
    else:
        raise UsageError("give --circuit or --probs")
    seed = _seed(args)
    rep = xeb_report(XebSample(2.0**n, probs), args.estimator, args.ks_f, args.n_boot, seed,
                     _workers(args), args.floor)
    config = {"estimator": args.estimator, "n_boot": args.n_boot, "seed": seed,
              "ks_f": args.ks_f, "floor": args.floor}
    _emit(args, {"seed": seed, **rep}, inputs, config)


def cmd_cutplan(args) -> None:
    circ = load_circuit(args.circuit)
    inputs = {"circuit": args.circuit}
    config = {"fidelity": args.fidelity}
    if args.cut:
        inputs["cut"] = args.cut
        cut = load_cut(args.cut, circ.n_qubits)
    else:
        imb = args.max_imbalance if args.max_imbalance is not None else circ.n_qubits % 2
        seed = args.seed if args.seed is not None else 0
        cut = search_optimal_cut(circ, imb, args.strategy, seed=seed).cut
        config.update(max_imbalance=imb, strategy=args.strategy, seed=seed)
    body = cutplan_report(circ, cut, args.fidelity)
    if args.manifest:
        if args.prefix_len is None:
            raise UsageError("--manifest needs --prefix-len")
        Path(args.manifest).write_text(dumps(run_manifest(circ, cut, args.prefix_len)), encoding="utf-8")
        config["prefix_len"] = args.prefix_len
    _emit(args, body, inputs, config)


def _constants(args) -> costmod.CostConstants:
    kw = {}
    if args.c_sa_ghz is not None:
        kw["C_SA"] = args.c_sa_ghz * 1e9
    if args.c_sfa_ghz is not None:
        kw["C_SFA"] = args.c_sfa_ghz * 1e9
    if args.c_qc_mhz is not None:
        kw["C_QC"] = args.c_qc_mhz * 1e6
    if args.memory_bytes is not None:
        kw["memory_bytes"] = args.memory_bytes
    if args.cores is not None:
        kw["cores"] = args.cores
    try:
        return costmod.CostConstants(**kw)
    except costmod.CostError as exc:
        raise UsageError(str(exc)) from None


def cmd_cost(args) -> None:
    c = _constants(args)
    config = {"constants": c.to_dict()}
    body: dict = {}
    if args.table_s3:
        body["table_s3"] = [
            {"n": r.n, "m": r.m, "paths": r.paths, "F": r.fidelity, "core_hours": r.core_hours,
             "years": r.years, "quoted_years": r.quoted_years, "relative_error": r.relative_error}
            for r in costmod.table_s3(c)
        ]
    if args.method:
        if (args.method != "quantum" or args.F is None) and (args.n is None or args.m is None):
            raise UsageError(f"--method {args.method} needs --n and --m")
        F = args.F
        if F is None and args.errors:
            F = costmod.circuit_fidelity(args.n, args.m, *_floats(args.errors, 3, "--errors"))
        row = {"method": args.method, "n": args.n, "m": args.m, "F": F}
        if args.method == "sa":
            r = costmod.t_sa(args.n, args.m, c)
            row.update(seconds=r.seconds, memory_bytes=r.memory_bytes, feasible=r.feasible)
        else:
            if F is None:
                raise UsageError(f"--method {args.method} needs --F or --errors")
            if args.method == "sfa":
                r = costmod.t_sfa(args.n, args.m, F, args.p, c)
                row.update(seconds=r.seconds, p=r.p, memory_bytes=r.total_memory,
                           memory_per_path=r.memory_per_path, feasible=r.feasible)
            else:
                row.update(seconds=costmod.t_quantum(F, c), memory_bytes=0)
        row["core_hours"] = row["seconds"] * c.cores / 3600 if args.method != "quantum" else 0.0
        body["estimate"] = row
        config.update(p=args.p)
    if args.region:
        if not (args.n_range and args.m_range and args.errors):
            raise UsageError("--region needs --n-range, --m-range and --errors")
        e = _floats(args.errors, 3, "--errors")
        grid = costmod.advantage_region(_range(args.n_range), _range(args.m_range), *e, c)
        if args.csv:
            Path(args.csv).write_text(grid.to_csv(), encoding="utf-8")
        body["region"] = {"n": grid.n_values, "m": grid.m_values, "label_grid": grid.labels,
                          "quantum_cells": len(grid.quantum_cells())}
        config.update(n_range=args.n_range, m_range=args.m_range, errors=e)
    if args.speedup:
        dt, phi, g, F = _floats(args.speedup, 4, "--speedup")
        body["imbalanced_speedup"] = {"delta_theta": dt, "phi": phi, "g": int(g), "F": F,
                                      "speedup": costmod.imbalanced_speedup(dt, phi, int(g), F)}
    if args.tn:
        flops, ns, F = _floats(args.tn, 3, "--tn")
        total = costmod.tn_cost_scaling(flops, ns, F)
        secs = costmod.summit_extrapolate(total, c)
        body["tensor_network"] = {"total_flops": total, "seconds": secs,
                                  "days": secs / costmod.SECONDS_PER_DAY, "years": secs / costmod.SECONDS_PER_YEAR}
    if not body:
        raise UsageError("nothing to compute; try --table-s3, --method, --region, --speedup or --tn")
    _emit(args, body, {}, config)


def cmd_merge(args) -> None:
    parts = [read_amplitudes(_exists(p, "partial")) for p in args.inputs]
    try:
        total, meta = merge_partials(parts)
    except KeyError as exc:
        raise UsageError(f"partial header lacks {exc.args[0]!r}") from None
    head = {"circuit_hash": meta["circuit_hash"], "fidelity": meta["fidelity"], "run_ids": meta["run_ids"]}
    write_amplitudes(args.output, total, head)
    body = {**meta, "amplitudes_sha256": hashlib.sha256(total.tobytes()).hexdigest()}
    _emit(args, body, {f"part{i}": p for i, p in enumerate(sorted(args.inputs))}, {"n_parts": len(parts)})


# ---- parser ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rqcbench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rqcbench {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="write the JSON report here instead of stdout")
    common.add_argument("--workers", type=int, default=None, help="threads (default: all cores)")
    common.add_argument("--seed", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="build a random circuit")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--device", choices=["zuchongzhi56"])
    g.add_argument("--cycles", type=int, required=True)
    g.add_argument("--variant", choices=["full", "patch", "elided"], default="full")
    g.add_argument("--elided-cycles", type=int, default=0)
    g.add_argument("--cut", help="cut JSON: {side1, side2} or a list of side-1 qubits")
    g.add_argument("--output", "-o", default="circuit.json")
    g.add_argument("--qcis", help="also write the circuit as QCIS text")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", parents=[common], help="compute amplitudes")
    s.add_argument("--circuit", required=True)
    s.add_argument("--engine", choices=["sv", "sfa"], default="sv")
    s.add_argument("--mode", choices=["full", "top", "subset"], default="full")
    s.add_argument("--fidelity", type=float)
    s.add_argument("--paths", help="comma-separated path numbers for --mode subset")
    s.add_argument("--cut")
    s.add_argument("--bitstrings", help="file of bitstrings; default is every basis state")
    s.add_argument("--precision", choices=["double", "single"], default="double")
    s.add_argument("--fuse-width", type=int)
    s.add_argument("--no-simplify", action="store_true")
    s.add_argument("--prefix-len", type=int)
    s.add_argument("--run-id", type=int)
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_simulate)

    sm = sub.add_parser("sample", parents=[common], help="draw bitstrings, ideal or noisy")
    sm.add_argument("--circuit", required=True)
    sm.add_argument("--n-samples", type=int, required=True)
    sm.add_argument("--noise", help="e1,e2,er")
    sm.add_argument("--precision", choices=["double", "single"], default="double")
    sm.add_argument("--output", "-o", default="samples.txt")
    sm.set_defaults(func=cmd_sample)

    x = sub.add_parser("xeb", parents=[common], help="fidelity estimate, KS test, bootstrap")
    x.add_argument("--samples")
    x.add_argument("--circuit")
    x.add_argument("--probs")
    x.add_argument("--estimator", choices=["linear", "log"], default="linear")
    x.add_argument("--n-boot", type=int, default=0)
    x.add_argument("--ks-f", type=float, help="fidelity hypothesis for the KS test (default: the estimate)")
    x.add_argument("--floor", choices=["min"])
    x.add_argument("--combine", nargs="+", help="combine earlier xeb reports")
    x.set_defaults(func=cmd_xeb)

    c = sub.add_parser("cutplan", parents=[common], help="score or search a cut")
    c.add_argument("--circuit", required=True)
    c.add_argument("--cut")
    c.add_argument("--max-imbalance", type=int)
    c.add_argument("--strategy", choices=["exhaustive", "heuristic"], default="exhaustive")
    c.add_argument("--fidelity", type=float)
    c.add_argument("--manifest", help="write a prefix-run manifest here")
    c.add_argument("--prefix-len", type=int)
    c.set_defaults(func=cmd_cutplan)

    k = sub.add_parser("cost", parents=[common], help="runtime and memory models")
    k.add_argument("--table-s3", action="store_true", help="SFA run times of the reference circuits")
    k.add_argument("--method", choices=["sa", "sfa", "quantum"])
    k.add_argument("--n", type=int)
    k.add_argument("--m", type=int)
    k.add_argument("--F", type=float)
    k.add_argument("--p", type=int)
    k.add_argument("--errors", help="e1,e2,er used to derive F")
    k.add_argument("--region", action="store_true")
    k.add_argument("--n-range", help="start:stop[:step], inclusive")
    k.add_argument("--m-range")
    k.add_argument("--csv", help="write the region grid as CSV")
    k.add_argument("--speedup", help="delta_theta,phi,g,F")
    k.add_argument("--tn", help="per_sample_flops,n_samples,F")
    k.add_argument("--c-sa-ghz", type=float)
    k.add_argument("--c-sfa-ghz", type=float)
    k.add_argument("--c-qc-mhz", type=float)
    k.add_argument("--memory-bytes", type=float)
    k.add_argument("--cores", type=int)
    k.set_defaults(func=cmd_cost)

    mg = sub.add_parser("merge", parents=[common], help="sum partial SFA amplitude files")
    mg.add_argument("inputs", nargs="+")
    mg.add_argument("--output", "-o", required=True)
    mg.set_defaults(func=cmd_merge)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        args.func(args)
    except MemoryCapError as exc:
        print(f"rqcbench: {exc}", file=sys.stderr)
        return EXIT_MEMORY
    except (UsageError, CircuitError, QcisError, SfaError, CutSearchError, XebError,
            costmod.CostError, ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"rqcbench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"rqcbench: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
