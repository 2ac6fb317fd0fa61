"""Command-line front end.

Every subcommand parses into a RunConfig, executes deterministically
given its seeds, and emits a ResultEnvelope: a JSON document carrying the
echoed config, artifact version, wall-clock timings, warnings, and the
payload proper.  Timings are the only non-reproducible part; stripping
the "timings" key from two envelopes produced by the same config must
leave byte-identical JSON.  File writes go through a temp-file/rename
pair so a crashed run never leaves a half-written artifact.

Set GRIDCYCLES_THREADS before launching to pin the BLAS thread count
(the package __init__ forwards it to the usual *_NUM_THREADS variables
ahead of the first numpy import).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

from . import __version__
from .counting import TRANSFER_WIDTH_CAP, count_cycles
from .errors import ConvergenceError, ResourceLimitError
from .lattice import LatticeShape
from .protocols import (ChemicalSequence, EnergyModel, amplify_count,
                        boltzmann_mps, dress, heteropolymer_partition)
from .tn import build_mpo_hhc, count_from_mps, encode_cycle_set, quality_report
from .tn.dmrg import ground_cycle_state
from .tn.mps import load_mps, save_mps

DEFAULT_SEED = 0
ARTIFACT = "gridcycles"


# ---------------------------------------------------------------------------
# Envelope plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """One executable unit of work: a subcommand plus its options.

    Serializable and replayable; `gridcycles replay` re-executes a config
    persisted inside any result envelope.
    """

    command: str
    options: dict

    def to_json(self) -> str:
        return json.dumps({"command": self.command, "options": self.options},
                          indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict) or "command" not in data:
            raise ValueError("run config needs a 'command' key")
        return cls(str(data["command"]), dict(data.get("options", {})))


@dataclass
class ResultEnvelope:
    """Config echo, artifact version, timings, warnings, and payload."""

    config: RunConfig
    payload: dict
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    artifact: str = ARTIFACT
    version: str = __version__

    def to_json(self) -> str:
        doc = {
            "artifact": self.artifact,
            "version": self.version,
            "config": {"command": self.config.command,
                       "options": self.config.options},
            "warnings": self.warnings,
            "timings": self.timings,
            "payload": self.payload,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _append_csv(path: str, schema: str, header: str, rows: list) -> None:
    """Append rows to a schema-stamped CSV, creating it when missing.

    The whole file is rewritten through the atomic path so a concurrent
    reader never sees a torn append.
    """
    head = f"# schema: {schema}\n{header}\n"
    if os.path.exists(path):
        with open(path) as fh:
            existing = fh.read()
        if not existing.startswith(f"# schema: {schema}"):
            raise ValueError(
                f"{path!r} carries a different schema; refusing to append")
    else:
        existing = head
    body = existing if existing.endswith("\n") else existing + "\n"
    _write_text_atomic(path, body + "".join(r + "\n" for r in rows))


def _emit(env: ResultEnvelope, out: str | None) -> None:
    text = env.to_json() + "\n"
    if out:
        _write_text_atomic(out, text)
        print(f"envelope -> {out}")
    else:
        sys.stdout.write(text)
    for w in env.warnings:
        print(f"warning: {w}", file=sys.stderr)


def _parse_shape(text: str) -> LatticeShape:
    try:
        return LatticeShape.parse(text)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}")


def _chi_schedule(chi: int) -> tuple[int, ...]:
    """Doubling ramp ending exactly at the requested cap."""
    if chi < 16:
        return (chi,)
    sched = [16]
    while sched[-1] * 2 <= chi:
        sched.append(sched[-1] * 2)
    if sched[-1] != chi:
        sched.append(chi)
    return tuple(sched)


def _exact_count_or_none(shape: LatticeShape):
    if min(shape.m, shape.n) <= TRANSFER_WIDTH_CAP:
        return count_cycles(shape, "transfer").count
    return None


# ---------------------------------------------------------------------------
# Subcommand handlers: each takes an options dict, returns an envelope
# ---------------------------------------------------------------------------

def cmd_count(options: dict) -> ResultEnvelope:
    shape = _parse_shape(options["shape"])
    method = options.get("method", "auto")
    warnings: list = []
    timings: dict = {}
    methods = ["transfer", "brute"] if method == "both" else [method]
    results = {}
    for meth in methods:
        t0 = time.perf_counter()
        res = count_cycles(shape, meth)
        # key by the resolved method so "auto" rows stay self-describing
        timings[f"{res.method}_seconds"] = time.perf_counter() - t0
        results[res.method] = res.count
    payload: dict = {"shape": str(shape), "m": shape.m, "n": shape.n,
                     "method": method, "counts": results}
    if method == "both":
        payload["agree"] = results["transfer"] == results["brute"]
        if not payload["agree"]:
            warnings.append("transfer and brute-force counts disagree")
    table = options.get("table")
    if table:
        rows = [f"{shape},{shape.m},{shape.n},{meth},{cnt},"
                f"{timings[f'{meth}_seconds']:.6f}"
                for meth, cnt in results.items()]
        _append_csv(table, "gridcycles-count v1",
                    "shape,m,n,method,count,seconds", rows)
        payload["artifacts"] = {"table": table}
    for meth, cnt in results.items():
        print(f"{shape} {meth}: {cnt}")
    return ResultEnvelope(RunConfig("count", options), payload,
                          timings, warnings)


def cmd_dmrg(options: dict) -> ResultEnvelope:
    shape = _parse_shape(options["shape"])
    chi = int(options.get("chi", 64))
    sweeps = int(options.get("sweeps", 40))
    seed = int(options.get("seed", DEFAULT_SEED))
    samples = int(options.get("samples", 1000))
    out = options.get("out") or f"dmrg_{shape.m}x{shape.n}_chi{chi}"
    warnings: list = []
    timings: dict = {}

    exact = options.get("exact_count")
    if exact is None:
        exact = _exact_count_or_none(shape)
        if exact is None:
            warnings.append("no exact count available; eps omitted")

    t0 = time.perf_counter()
    psi, trace = ground_cycle_state(shape, chi_schedule=_chi_schedule(chi),
                                    sweep_limit=sweeps, seed=seed)
    timings["dmrg_seconds"] = time.perf_counter() - t0

    converged = len(trace) >= 2 and abs(
        trace[-1].energy - trace[-2].energy) < 1e-8
    if not converged:
        warnings.append("energy not settled within tolerance at the sweep "
                        "limit; artifacts written anyway")

    mpo = build_mpo_hhc(shape)
    report = quality_report(psi, mpo, n_samples=samples, seed=seed,
                            exact_count=exact)
    checkpoint = out + ".mps"
    save_mps(checkpoint, psi)

    payload = {
        "shape": str(shape), "chi": chi, "seed": seed,
        "exact_count": exact,
        "converged": converged,
        "sweeps_run": len(trace),
        "sweep_trace": [asdict(r) for r in trace],
        "quality": asdict(report),
        "artifacts": {"checkpoint": checkpoint, "envelope": out + ".json"},
    }
    env = ResultEnvelope(RunConfig("dmrg", options), payload,
                         timings, warnings)
    print(f"{shape} chi={chi} energy={report.energy:.3e} "
          f"count={report.count_estimate:.6f}"
          + (f" eps={report.rel_count_error:.3e}" if exact else ""))
    print(f"checkpoint -> {checkpoint}")
    return env


def cmd_report(options: dict) -> ResultEnvelope:
    path = options["checkpoint"]
    samples = int(options.get("samples", 1000))
    seed = int(options.get("seed", DEFAULT_SEED))
    psi = load_mps(path)
    shape = psi.shape
    out = options.get("out") or f"report_{shape.m}x{shape.n}_chi{psi.max_bond}"
    warnings: list = []
    timings: dict = {}

    exact = options.get("exact_count")
    if exact is None:
        exact = _exact_count_or_none(shape)
    t0 = time.perf_counter()
    mpo = build_mpo_hhc(shape)
    report = quality_report(psi, mpo, n_samples=samples, seed=seed,
                            exact_count=exact)
    timings["report_seconds"] = time.perf_counter() - t0

    csv_path = out + "_entropy.csv"
    num_sites = psi.num_sites
    rows = [f"{shape},{shape.m},{shape.n},{psi.max_bond},{k + 1},"
            f"{(k + 1) / num_sites:.8f},{max(0.0, s):.10f},"
            f"{max(0.0, s) / min(shape.m, shape.n):.10f}"
            for k, s in enumerate(report.entropy_profile)]
    _append_csv(csv_path, "gridcycles-entropy v1",
                "shape,m,n,chi,cut,cut_fraction,entropy,entropy_over_min_side",
                rows)

    payload = {
        "shape": str(shape), "checkpoint": path,
        "quality": asdict(report),
        "artifacts": {"entropy_csv": csv_path, "envelope": out + ".json"},
    }
    print(f"{shape} chi={psi.max_bond} count={report.count_estimate:.6f} "
          f"multiloop_prob={report.multiloop_prob:.4f}")
    print(f"entropy table -> {csv_path}")
    return ResultEnvelope(RunConfig("report", options), payload,
                          timings, warnings)


def cmd_bench(options: dict) -> ResultEnvelope:
    shapes = [_parse_shape(s) for s in options["shapes"].split(",")]
    chis = sorted(int(c) for c in options["chis"].split(","))
    target = float(options.get("target_eps", 0.005))
    seed = int(options.get("seed", DEFAULT_SEED))
    out = options.get("out") or "bench"
    warnings: list = []
    run_timings: list = []
    payload_shapes: list = []
    csv_rows: list = []

    for shape in shapes:
        exact = _exact_count_or_none(shape)
        if exact is None:
            warnings.append(f"{shape}: no exact count; skipped")
            continue
        entry: dict = {"shape": str(shape), "n": shape.n,
                       "exact_count": exact, "target_eps": target,
                       "results": [], "achieved_chi": None}
        for chi in chis:
            t0 = time.perf_counter()
            psi, trace = ground_cycle_state(
                shape, chi_schedule=_chi_schedule(chi), seed=seed)
            dt = time.perf_counter() - t0
            count = count_from_mps(psi)
            eps = abs(count - exact) / exact
            entry["results"].append({"chi": chi, "eps": eps,
                                     "energy": trace[-1].energy})
            run_timings.append({"shape": str(shape), "chi": chi,
                                "seconds": dt})
            csv_rows.append(f"{shape.n},{chi},{dt:.6f}")
            print(f"{shape} chi={chi} eps={eps:.3e} ({dt:.1f}s)")
            if eps < target:
                entry["achieved_chi"] = chi
                break
        if entry["achieved_chi"] is None:
            warnings.append(
                f"{shape}: no listed chi reaches eps < {target}")
        payload_shapes.append(entry)

    csv_path = out + ".csv"
    _append_csv(csv_path, "gridcycles-bench v1", "n,chi,seconds", csv_rows)
    payload = {"target_eps": target, "shapes": payload_shapes,
               "artifacts": {"csv": csv_path, "envelope": out + ".json"}}
    return ResultEnvelope(RunConfig("bench", options), payload,
                          {"runs": run_timings}, warnings)


def cmd_boltzmann(options: dict) -> ResultEnvelope:
    shape = _parse_shape(options["shape"])
    betas = [float(b) for b in str(options.get("beta", "0")).split(",")]
    eps_b = float(options.get("eps_b", 1.0))
    checkpoint = options.get("checkpoint")
    warnings: list = []
    timings: dict = {}
    model = EnergyModel.bend(eps_b)

    t0 = time.perf_counter()
    if checkpoint:
        psi = load_mps(checkpoint)
        if psi.shape != shape:
            raise SystemExit(f"error: checkpoint holds {psi.shape}, "
                             f"not {shape}")
        source = "checkpoint"
        exact = None
    else:
        psi = encode_cycle_set(shape)
        source = "exact"
        exact = count_cycles(shape, "auto").count
    entries = []
    for beta in betas:
        _, z = boltzmann_mps(psi, model, beta, exact_count=exact)
        entries.append({"beta": beta, "Z": z})
        print(f"{shape} beta={beta:g} Z={z:.10g}")
    timings["boltzmann_seconds"] = time.perf_counter() - t0

    payload = {"shape": str(shape), "eps_b": eps_b, "source": source,
               "entries": entries}
    return ResultEnvelope(RunConfig("boltzmann", options), payload,
                          timings, warnings)


def cmd_dress(options: dict) -> ResultEnvelope:
    shape = _parse_shape(options["shape"])
    seq = ChemicalSequence.from_string(options["seq"])
    beta = options.get("beta")
    warnings: list = []
    timings: dict = {}

    t0 = time.perf_counter()
    ensemble = dress(shape, seq)
    timings["dress_seconds"] = time.perf_counter() - t0
    payload = {"report": ensemble.report()}
    if len(ensemble.terms) <= 512:
        payload["terms"] = sorted(
            [{"cycle": key[0], "assignment": "".join(key[1]),
              "amplitude": amp} for key, amp in ensemble.terms.items()],
            key=lambda d: (d["cycle"], d["assignment"]))
    else:
        warnings.append("term list omitted (over 512 entries)")
    if beta is not None:
        t0 = time.perf_counter()
        z = heteropolymer_partition(ensemble, beta=float(beta))
        timings["partition_seconds"] = time.perf_counter() - t0
        payload["partition"] = {"beta": float(beta), "Z": z}
        print(f"Z_hp(beta={float(beta):g}) = {z:.10g}")
    csv_path = options.get("csv")
    if csv_path:
        rows = [f"{shape},{''.join(seq.symbols)},{t.cycle_index},"
                f"{t.start[0] * shape.n + t.start[1]},{t.orientation},"
                f"{''.join(t.vertex_symbols)},{t.amplitude!r}"
                for t in ensemble.triples]
        _append_csv(csv_path, "gridcycles-dressing v1",
                    "shape,sequence,cycle,start_vertex,orientation,"
                    "assignment,amplitude", rows)
        payload["artifacts"] = {"csv": csv_path}
    rep = payload["report"]
    print(f"{shape} seq={''.join(seq.symbols)}: {rep['paths']} uniform terms "
          f"(amplitude {rep['path_amplitude']:.6f}) over {rep['cycles']} "
          f"cycles, {rep['distinct_terms']} distinct assignments, "
          f"sum |amp|^2 = {rep['total_squared_amplitude']:.12f}")
    return ResultEnvelope(RunConfig("dress", options), payload,
                          timings, warnings)


def cmd_amplify(options: dict) -> ResultEnvelope:
    shape = _parse_shape(options["shape"])
    max_iter = int(options.get("max_iter", 20))
    timings: dict = {}
    t0 = time.perf_counter()
    run = amplify_count(shape, max_iterations=max_iter)
    timings["amplify_seconds"] = time.perf_counter() - t0
    payload = json.loads(run.to_json())
    p_opt = dict(run.trace)[run.k_opt]
    payload["p_opt"] = p_opt
    print(f"{shape} r={run.r:.6f} k_opt={run.k_opt} p={p_opt:.6f}")
    return ResultEnvelope(RunConfig("amplify", options), payload, timings, [])


_HANDLERS = {
    "count": cmd_count,
    "dmrg": cmd_dmrg,
    "report": cmd_report,
    "bench": cmd_bench,
    "boltzmann": cmd_boltzmann,
    "dress": cmd_dress,
    "amplify": cmd_amplify,
}


def run_config(config: RunConfig) -> ResultEnvelope:
    """Execute a RunConfig and return its envelope (the replay path)."""
    handler = _HANDLERS.get(config.command)
    if handler is None:
        raise SystemExit(f"error: unknown command {config.command!r}")
    return handler(config.options)


def cmd_replay(options: dict) -> ResultEnvelope:
    with open(options["envelope"]) as fh:
        doc = json.load(fh)
    config = RunConfig.from_dict(doc.get("config", doc))
    return run_config(config)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridcycles",
        description="Hamiltonian-cycle ensembles on grid graphs: exact "
                    "counting, DMRG preparation, and diagonal protocols.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count Hamiltonian cycles exactly")
    p.add_argument("--shape", required=True, metavar="MxN")
    p.add_argument("--method", default="auto",
                   choices=("auto", "transfer", "brute", "both"))
    p.add_argument("--table", help="CSV file to append the counts to")
    p.add_argument("--out", help="write the result envelope JSON here")

    p = sub.add_parser("dmrg", help="variationally prepare the uniform "
                                    "cycle superposition")
    p.add_argument("--shape", required=True, metavar="MxN")
    p.add_argument("--chi", type=int, default=64,
                   help="bond dimension cap (default 64)")
    p.add_argument("--sweeps", type=int, default=40,
                   help="sweep limit per stage (default 40)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--samples", type=int, default=1000,
                   help="sample draws for the quality report")
    p.add_argument("--exact-count", type=int, dest="exact_count",
                   help="known cycle count (skips the transfer recount)")
    p.add_argument("--out", help="artifact prefix (default dmrg_MxN_chiC)")

    p = sub.add_parser("report", help="quality diagnostics for a saved "
                                      "checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--exact-count", type=int, dest="exact_count")
    p.add_argument("--out", help="artifact prefix")

    p = sub.add_parser("bench", help="smallest bond dimension reaching a "
                                     "count-error target per shape")
    p.add_argument("--shapes", required=True,
                   help="comma-separated list, e.g. 6x8,6x10,6x12")
    p.add_argument("--chis", required=True,
                   help="comma-separated bond dimensions, e.g. 32,64,128")
    p.add_argument("--target-eps", type=float, default=0.005,
                   dest="target_eps")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="artifact prefix (default bench)")

    p = sub.add_parser("protocols", help="diagonal-ensemble protocols")
    psub = p.add_subparsers(dest="protocol", required=True)

    q = psub.add_parser("boltzmann", help="bend-energy partition function")
    q.add_argument("--shape", required=True, metavar="MxN")
    q.add_argument("--beta", default="0",
                   help="inverse temperature, or comma-separated list")
    q.add_argument("--eps-b", type=float, default=1.0, dest="eps_b")
    q.add_argument("--checkpoint",
                   help="reuse a DMRG checkpoint instead of the exact "
                        "cycle encoding")
    q.add_argument("--out")

    q = psub.add_parser("dress", help="sequence placements along cycles")
    q.add_argument("--shape", required=True, metavar="MxN")
    q.add_argument("--seq", required=True,
                   help="symbol string of length m*n, e.g. PPHHPPHH")
    q.add_argument("--beta", type=float,
                   help="also evaluate the H/P contact partition function")
    q.add_argument("--csv", help="write the full term table here")
    q.add_argument("--out")

    q = psub.add_parser("amplify", help="iterative success-probability "
                                        "amplification")
    q.add_argument("--shape", required=True, metavar="MxN")
    q.add_argument("--max-iter", type=int, default=20, dest="max_iter")
    q.add_argument("--out")

    p = sub.add_parser("replay", help="re-execute the config stored in a "
                                      "result envelope")
    p.add_argument("envelope", help="path to an envelope JSON file")
    p.add_argument("--out")

    return parser


_PREFIX_COMMANDS = frozenset({"dmrg", "report", "bench"})


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = args.command
    options = {k: v for k, v in vars(args).items()
               if k not in ("command", "protocol") and v is not None}
    if command == "protocols":
        command = args.protocol
    # For artifact-producing commands --out is a filename prefix the handler
    # consumes; for the rest it is the envelope destination itself.
    out = None if command in _PREFIX_COMMANDS else options.pop("out", None)
    try:
        if command == "replay":
            env = cmd_replay(options)
        else:
            env = run_config(RunConfig(command, options))
    except (ResourceLimitError, ConvergenceError, ValueError,
            RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    dest = env.payload.get("artifacts", {}).get("envelope") or out
    _emit(env, dest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
