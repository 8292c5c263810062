"""Experiment runner.

Reads a flat key=value config (flags win over file values), generates
or replays a communication sequence, runs the selected algorithms over
it, and writes one CSV per (algorithm, p, seed) plus a summary JSON
with consensus times, connectivity classification and observed
resource-cost extremes.

Artifacts:

* trace files are JSONL, one signal per line:
  ``{"s": sender, "r": receiver, "t0": send, "t1": recv}``; the two
  members of an instantaneous bidirectional pair are adjacent lines
  additionally tagged ``"bidir": true``.
* run CSVs have the fixed header
  ``time,network_error,max_node_error,signals,omega`` with floats
  printed to 17 significant digits so a replay can compare exactly.

Exit codes: 0 success, 2 configuration problems, 3 ARIS positivity
violations.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import connectivity, metrics
from .core import CommSequence, PositivityError, Signal, TraceError, make_instance, sequence_from_events
from .generators import RandomProtocolConfig, gen_double_cycle, gen_random_protocol
from .sim import RunOptions, RunRecord, run

CSV_HEADER = "time,network_error,max_node_error,signals,omega"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_csv(path: Path, record: RunRecord) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for time, max_err, net_err, signals, omega in record.samples:
            fh.write(f"{_fmt(time)},{_fmt(net_err)},{_fmt(max_err)},{signals},{omega}\n")


def write_trace(path: Path, seq: CommSequence) -> None:
    with open(path, "w") as fh:
        for sig in seq.events:
            row = {"s": sig.sender, "r": sig.receiver, "t0": sig.t_send, "t1": sig.t_recv}
            if sig.pair_id is not None:
                row["bidir"] = True
            fh.write(json.dumps(row) + "\n")


def load_trace(path: Path) -> CommSequence:
    """Parse a JSONL trace; adjacent bidir lines re-pair into one event."""
    signals: list[Signal] = []
    open_pair: Optional[int] = None
    pair_count = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                sig = Signal(t_recv=float(row["t1"]), event_id=lineno,
                             t_send=float(row["t0"]), sender=int(row["s"]),
                             receiver=int(row["r"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise TraceError(f"{path}:{lineno + 1}: bad trace line ({exc})") from exc
            if row.get("bidir"):
                if open_pair is None:
                    open_pair = pair_count
                    pair_count += 1
                else:
                    prev = signals[-1]
                    if (prev.sender, prev.receiver) != (sig.receiver, sig.sender) or \
                       prev.t_send != sig.t_send:
                        raise TraceError(f"{path}:{lineno + 1}: bidir lines do not mirror")
                    open_pair = None
                sig = Signal(t_recv=sig.t_recv, event_id=sig.event_id, t_send=sig.t_send,
                             sender=sig.sender, receiver=sig.receiver,
                             pair_id=pair_count - 1)
            elif open_pair is not None:
                raise TraceError(f"{path}:{lineno + 1}: dangling bidir line")
            signals.append(sig)
    if open_pair is not None:
        raise TraceError(f"{path}: dangling bidir line at end of file")
    return sequence_from_events(signals)


OPTION_KEYS = {
    "n": int, "d": int, "r": int, "horizon": int, "sample_every": int, "k_fold": int,
    "p": str, "algs": str, "seeds": str, "seq": str, "initials": str, "out": str,
    "dda_variant": str, "dda_p_switch": float, "delay": str,
}

DEFAULTS = {
    "n": 80, "d": 1, "r": None, "horizon": 20000, "sample_every": 50, "k_fold": 1,
    "p": "1,0.5,0.25,0", "algs": "bm,da,oh,dda,gossip,aris", "seeds": "1",
    "seq": "random", "initials": "index", "out": "out",
    "dda_variant": "primary", "dda_p_switch": 0.5, "delay": "instantaneous",
}


def parse_config_file(path: Path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in OPTION_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = OPTION_KEYS[key](val.strip())
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="consensim",
                                 description="run consensus-algorithm experiments")
    ap.add_argument("--config", type=Path, help="flat key=value config file")
    ap.add_argument("--seq", help="random | double-cycle | trace:PATH")
    ap.add_argument("--p", help="comma list of back-signal probabilities")
    ap.add_argument("--n", type=int)
    ap.add_argument("--d", type=int)
    ap.add_argument("--r", type=int, help="ARIS sketch width (default n)")
    ap.add_argument("--algs", help="comma list from bm,da,oh,dda,gossip,aris")
    ap.add_argument("--seeds", help="comma list of seeds")
    ap.add_argument("--horizon", type=int)
    ap.add_argument("--sample-every", dest="sample_every", type=int)
    ap.add_argument("--initials", help='"index" or JSON list of vectors')
    ap.add_argument("--dda-variant", dest="dda_variant",
                    choices=["primary", "alternative", "randomized"])
    ap.add_argument("--dda-p-switch", dest="dda_p_switch", type=float)
    ap.add_argument("--delay", help="instantaneous | fixed:D | uniform:A,B")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--k-fold", dest="k_fold", type=int,
                    help="report whether the block count reaches K")
    ap.add_argument("--check-only", type=Path, metavar="TRACE",
                    help="classify a trace file and emit the report only")
    return ap


def resolve_options(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        cfg.update(parse_config_file(args.config))
    for key in OPTION_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _parse_initials(spec: str, n: int, d: int):
    if spec == "index":
        return [[float(i)] * d for i in range(1, n + 1)]
    vals = json.loads(spec)
    return vals


def _parse_delay(spec: str) -> tuple[str, float, float]:
    if spec == "instantaneous":
        return "instantaneous", 0.0, 0.0
    kind, _, rest = spec.partition(":")
    if kind == "fixed":
        delta = float(rest)
        return "fixed", delta, delta
    if kind == "uniform":
        lo, hi = (float(x) for x in rest.split(","))
        return "uniform", lo, hi
    raise ValueError(f"unknown delay spec {spec!r}")


def make_sequence(cfg: dict, p: float, seed: int) -> CommSequence:
    seq_spec = cfg["seq"]
    if seq_spec == "random":
        delay, lo, hi = _parse_delay(cfg["delay"])
        return gen_random_protocol(RandomProtocolConfig(
            n=cfg["n"], p=p, horizon=cfg["horizon"], seed=seed,
            delay=delay, delay_min=lo, delay_max=hi))
    if seq_spec == "double-cycle":
        return gen_double_cycle(cfg["n"])
    if seq_spec.startswith("trace:"):
        return load_trace(Path(seq_spec[len("trace:"):]))
    raise ValueError(f"unknown sequence spec {seq_spec!r}")


def run_experiment(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    n, d = cfg["n"], cfg["d"]
    inst = make_instance(n, d, _parse_initials(cfg["initials"], n, d))
    algs = [a.strip() for a in cfg["algs"].split(",") if a.strip()]
    seeds = [int(s) for s in str(cfg["seeds"]).split(",")]
    aris_r = cfg["r"] if cfg["r"] is not None else n
    ps = [float(x) for x in str(cfg["p"]).split(",")] if cfg["seq"] == "random" else [0.0]

    summary = {"config": {k: cfg[k] for k in sorted(cfg)}, "sequences": [], "runs": [],
               "table_bounds": {alg: vars(metrics.table_bounds(alg, n, d, aris_r)) |
                                {"omega_min": metrics.table_bounds(alg, n, d, aris_r).omega_min,
                                 "omega_max": metrics.table_bounds(alg, n, d, aris_r).omega_max}
                                for alg in algs}}
    for p in ps:
        for seed in seeds:
            seq = make_sequence(cfg, p, seed)
            report = connectivity.analyze(seq, n)
            summary["sequences"].append({
                "p": p, "seed": seed, "events": len(seq),
                "report": report.to_dict(),
                "k_fold": cfg["k_fold"],
                "k_fold_svsc": report.svsc_blocks >= cfg["k_fold"],
                "k_fold_svcc": report.svcc_blocks >= cfg["k_fold"],
            })
            for alg in algs:
                opts = RunOptions(alg=alg, dda_variant=cfg["dda_variant"],
                                  dda_p_switch=cfg["dda_p_switch"],
                                  aris_r=aris_r if alg == "aris" else None, seed=seed)
                record = run(inst, opts, seq, sample_every=cfg["sample_every"])
                tag = f"{alg}_p{p:g}_s{seed}"
                write_csv(out / f"{tag}.csv", record)
                costs = record.costs
                summary["runs"].append({
                    "alg": alg, "p": p, "seed": seed, "csv": f"{tag}.csv",
                    "consensus_times": {str(i): t for i, t in record.consensus_times.items()},
                    "network_consensus_time": record.network_consensus_time(),
                    "final_network_error": record.samples[-1][2],
                    "events": record.events_applied,
                    "omega_min": costs.omega_min, "omega_max": costs.omega_max,
                    "phi_min": costs.phi_min, "phi_max": costs.phi_max,
                    "rho_min": costs.rho_min, "rho_max": costs.rho_max,
                })
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_options(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.check_only is not None:
        try:
            seq = load_trace(args.check_only)
            n = cfg["n"] if args.n is not None or args.config is not None else seq.max_node()
            report = connectivity.analyze(seq, n)
        except (TraceError, OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(report.to_dict(), indent=2))
        return 0

    try:
        return run_experiment(cfg)
    except PositivityError as exc:
        print(f"positivity error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, TraceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
