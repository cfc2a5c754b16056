"""Experiment runner CLI.

Subcommands::

    sweep            SBP against traffic load for one heuristic
    bound            paired heuristic/defragmentation-bound sweeps + capacity gain
    warmup           MSER-5 warm-up length distribution against load
    truncation-demo  effect of holding-time truncation on the sample mean
    paths            candidate-path audit for a topology
    presets          print the resolved problem-setting presets
    rerun            replay a saved run manifest

Every data-producing run writes a ``manifest.json`` (resolved
parameters plus tool version, no timestamps) that ``rerun`` replays
byte-for-byte; wall-clock metadata goes to ``run_meta.json``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    CapacityGainReport,
    CrossingNotBracketedError,
    crossing_load,
    defrag_bound_trial,
    write_bound_trials_csv,
    write_gain_report,
    write_outcomes_csv,
)
from .heuristics import HeuristicKind
from .presets import PRESETS, PresetError, get_preset
from .simulator import (
    SimConfigError,
    estimate_warmup,
    sweep,
    warmup_slope,
    write_summary_csv,
    write_trials_csv,
)
from .topology import PathOrdering, Topology, TopologyError, load_bundled, load_topology, ordering_overlap
from .traffic import TRUNCATED_MEAN_RATIO, TrafficConfigError, sample_holding_times


class CliError(ValueError):
    """Configuration-level CLI failure (exit code 2)."""


def parse_loads(spec: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive stop) or a comma list."""
    spec = spec.strip()
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            loads = []
            value = start
            while value <= stop + 1e-9:
                loads.append(round(value, 9))
                value += step
            return loads
        loads = [float(p) for p in spec.split(",") if p.strip()]
        if not loads:
            raise ValueError("empty list")
        return loads
    except ValueError as exc:
        raise CliError(f"malformed --loads {spec!r}: {exc}") from None


def _resolve_topology(args, preset=None) -> Topology:
    name = args.topology
    if name is None:
        raise CliError("--topology is required")
    slots = getattr(args, "slots", None)
    fiber_mode = getattr(args, "fiber_mode", None)
    if Path(name).is_file():
        return load_topology(name, slots_per_fiber=slots, fiber_mode=fiber_mode)
    if preset is not None:
        return preset.load_topology(name, slots_per_fiber=slots, fiber_mode=fiber_mode)
    return load_bundled(name, slots_per_fiber=slots, fiber_mode=fiber_mode)


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output path {out} is not writable: {exc}") from None
    return out


def _write_manifest(out: Path, subcommand: str, manifest_args: dict) -> None:
    doc = {
        "tool": "eonsim",
        "version": __version__,
        "subcommand": subcommand,
        "args": manifest_args,
    }
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_meta(out: Path, started: float) -> None:
    doc = {
        "started_unix": started,
        "finished_unix": time.time(),
        "duration_s": round(time.time() - started, 3),
    }
    (out / "run_meta.json").write_text(json.dumps(doc, indent=2) + "\n")


def _sim_config(args, preset, topology, load0: float):
    overrides = dict(
        warmup_requests=args.warmup,
        measured_requests=args.measured,
        trials=args.trials,
        base_seed=args.seed,
        guard_slots=args.guard_slots,
    )
    if args.modulation_file:
        from .service import ModulationTable

        overrides["modulation"] = ModulationTable.from_json(args.modulation_file)
    return preset.sim_config(
        topology,
        HeuristicKind.from_name(args.heuristic),
        args.k,
        PathOrdering(args.ordering),
        load0,
        **overrides,
    )


def _manifest_args(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


_SWEEP_KEYS = (
    "preset", "topology", "heuristic", "k", "ordering", "loads", "trials",
    "seed", "warmup", "measured", "slots", "fiber_mode", "guard_slots",
    "modulation_file", "jobs", "out",
)


def cmd_sweep(args) -> int:
    started = time.time()
    preset = get_preset(args.preset)
    topology = _resolve_topology(args, preset)
    loads = parse_loads(args.loads)
    config = _sim_config(args, preset, topology, loads[0])
    out = _out_dir(args)
    result = sweep(config, loads, jobs=args.jobs)
    write_trials_csv(result, out / "trials.csv")
    write_summary_csv(result, out / "summary.csv")
    _write_manifest(out, "sweep", _manifest_args(args, _SWEEP_KEYS))
    _write_meta(out, started)
    for p in result.points:
        print(
            f"load {p.load_erlangs:g}: mean SBP {p.mean_sbp:.4g} "
            f"(std {p.std_sbp:.2g}, {p.blocked_total} blocks over {p.trials} trials)"
        )
    print(f"wrote {out / 'trials.csv'} and {out / 'summary.csv'}")
    return 0


def cmd_bound(args) -> int:
    started = time.time()
    preset = get_preset(args.preset)
    topology = _resolve_topology(args, preset)
    loads = parse_loads(args.loads)
    config = _sim_config(args, preset, topology, loads[0])
    out = _out_dir(args)

    heur = sweep(config, loads, jobs=args.jobs)
    bound = sweep(config, loads, jobs=args.jobs, trial_runner=defrag_bound_trial)
    write_trials_csv(heur, out / "heuristic_trials.csv")
    write_summary_csv(heur, out / "heuristic_summary.csv")
    write_bound_trials_csv(bound, out / "bound_trials.csv")
    write_summary_csv(bound, out / "bound_summary.csv")

    if args.record_outcomes:
        first = True
        for point in bound.points:
            for trial, r in enumerate(point.results):
                full = defrag_bound_trial(
                    config.with_load(point.load_erlangs), r.seed, record_outcomes=True
                )
                write_outcomes_csv(
                    point.load_erlangs, trial, full, out / "outcomes.csv", append=not first
                )
                first = False

    keys = _SWEEP_KEYS + ("target_sbp", "record_outcomes")
    _write_manifest(out, "bound", _manifest_args(args, keys))
    _write_meta(out, started)

    for hp, bp in zip(heur.points, bound.points):
        print(
            f"load {hp.load_erlangs:g}: heuristic SBP {hp.mean_sbp:.4g}, "
            f"bound SBP {bp.mean_sbp:.4g}"
        )
    try:
        report = CapacityGainReport(
            target_sbp=args.target_sbp,
            heuristic_load=crossing_load(heur.points, args.target_sbp, label="heuristic"),
            bound_load=crossing_load(bound.points, args.target_sbp, label="bound"),
        )
    except CrossingNotBracketedError as exc:
        print(f"capacity gain unavailable: {exc}", file=sys.stderr)
        return 3
    write_gain_report(report, out / "gain_report.json")
    print(
        f"load at {report.target_sbp:g} SBP: heuristic {report.heuristic_load:.1f} E, "
        f"bound {report.bound_load:.1f} E, relative gain {report.relative_gain:+.1%}"
    )
    return 0


def cmd_warmup(args) -> int:
    started = time.time()
    loads = parse_loads(args.loads)
    out = _out_dir(args)
    estimates = [
        estimate_warmup(load, args.trials, seed=args.seed) for load in loads
    ]
    with open(out / "warmup_points.csv", "w", newline="") as fh:
        fh.write("load_erlangs,trial,truncation_requests\n")
        for est in estimates:
            for i, p in enumerate(est.truncation_points):
                fh.write(f"{est.load_erlangs:.12g},{i},{p}\n")
    with open(out / "warmup_summary.csv", "w", newline="") as fh:
        fh.write("load_erlangs,q1,median,q3,whisker_max\n")
        for est in estimates:
            fh.write(
                f"{est.load_erlangs:.12g},{est.q1:.12g},{est.median:.12g},"
                f"{est.q3:.12g},{est.whisker_max:.12g}\n"
            )
    slope, intercept = (math.nan, math.nan)
    if len(estimates) >= 2:
        slope, intercept = warmup_slope(estimates)
        (out / "warmup_fit.json").write_text(
            json.dumps({"slope": round(slope, 6), "intercept": round(intercept, 6)}, indent=2)
            + "\n"
        )
    keys = ("loads", "trials", "seed", "out")
    _write_manifest(out, "warmup", _manifest_args(args, keys))
    _write_meta(out, started)
    for est in estimates:
        print(
            f"load {est.load_erlangs:g}: median {est.median:g}, "
            f"whisker max {est.whisker_max:g} requests"
        )
    if len(estimates) >= 2:
        print(f"whisker-max fit: {slope:.2f} requests per Erlang (intercept {intercept:.0f})")
    return 0


def cmd_truncation_demo(args) -> int:
    rng_plain, rng_trunc = (
        np.random.default_rng(s) for s in np.random.SeedSequence(args.seed).spawn(2)
    )
    plain = sample_holding_times(1.0, False, rng_plain, args.samples)
    truncated = sample_holding_times(1.0, True, rng_trunc, args.samples)
    ratio = truncated.mean() / plain.mean()
    print(f"samples: {args.samples}")
    print(f"untruncated mean: {plain.mean():.6f}")
    print(f"truncated mean: {truncated.mean():.6f}")
    print(f"mean ratio: {ratio:.6f} (analytic {TRUNCATED_MEAN_RATIO:.6f})")
    print(f"load reduction: {1 - ratio:.1%}")
    return 0


def cmd_paths(args) -> int:
    started = time.time()
    topology = _resolve_topology(args)
    ordering = PathOrdering(args.ordering)
    rows = []
    counts = []
    overlaps = []
    for src in topology.nodes:
        for dst in topology.nodes:
            if src == dst:
                continue
            paths = topology.candidate_paths(src, dst, args.k, ordering)
            counts.append(len(paths))
            if args.diagnose_orderings:
                overlaps.append(ordering_overlap(topology, src, dst, args.k))
            rows.append((src, dst, len(paths), paths[0].hop_count if paths else 0,
                         paths[0].length_km if paths else 0.0))
    n_pairs = len(counts)
    full = sum(1 for c in counts if c >= args.k)
    print(f"topology {topology.name}: {n_pairs} ordered pairs, k={args.k}, ordering={args.ordering}")
    print(f"pairs with k paths: {full}/{n_pairs}; min paths {min(counts)}, mean {np.mean(counts):.1f}")
    if overlaps:
        print(
            f"ordering-unique path fraction (km vs hops): mean {np.mean(overlaps):.1%}, "
            f"max {np.max(overlaps):.1%}"
        )
    if args.out:
        out = _out_dir(args)
        with open(out / "paths.csv", "w", newline="") as fh:
            fh.write("src,dst,paths,best_hops,best_km\n")
            for src, dst, n, hops, km in rows:
                fh.write(f"{src},{dst},{n},{hops},{km:.12g}\n")
        keys = ("topology", "k", "ordering", "diagnose_orderings", "out")
        _write_manifest(out, "paths", _manifest_args(args, keys))
        _write_meta(out, started)
        print(f"wrote {out / 'paths.csv'}")
    return 0


def cmd_presets(args) -> int:
    names = [args.preset] if args.preset else sorted(PRESETS)
    for name in names:
        p = get_preset(name)
        demand = (
            f"{p.rate_gbps_range[0]}-{p.rate_gbps_range[1]} Gbps uniform"
            if p.rate_gbps_range
            else f"fixed slots {sorted(set(p.fixed_slot_choices))}"
        )
        print(
            f"{p.name}: fiber={p.fiber_mode}, slots={p.slots_per_fiber}, "
            f"demand={demand}, modulation={'on' if p.use_modulation else 'off'}, "
            f"truncation={'on' if p.truncate_holding else 'off'}, "
            f"mean holding={p.holding_time_mean:g}"
        )
        if p.topology_aliases:
            print(f"    topology aliases: {dict(p.topology_aliases)}")
    return 0


def cmd_rerun(args) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read manifest {args.manifest}: {exc}") from None
    sub = doc.get("subcommand")
    stored = doc.get("args", {})
    argv = [sub]
    for key, value in stored.items():
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    if args.out:
        # redirect artifacts without touching the stored parameters
        try:
            idx = argv.index("--out")
            argv[idx + 1] = args.out
        except ValueError:
            argv.extend(["--out", args.out])
    print(f"rerunning: eonsim {' '.join(argv)}")
    return main(argv)


def _add_common_run_flags(sub):
    sub.add_argument("--preset", required=True, choices=sorted(PRESETS))
    sub.add_argument("--topology", required=True,
                     help="bundled topology name or path to a topology JSON file")
    sub.add_argument("--heuristic", default="ksp-ff",
                     choices=[k.value for k in HeuristicKind])
    sub.add_argument("--k", type=int, default=5)
    sub.add_argument("--ordering", choices=["km", "hops"], default="hops")
    sub.add_argument("--loads", required=True,
                     help="start:stop:step (inclusive) or comma-separated list")
    sub.add_argument("--trials", type=int, default=10)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--warmup", type=int, default=3000,
                     help="warm-up requests before the measured window")
    sub.add_argument("--measured", type=int, default=10000,
                     help="measured requests per trial")
    sub.add_argument("--slots", type=int, default=None,
                     help="override the preset's slots per fiber")
    sub.add_argument("--fiber-mode", choices=["dual", "single"], default=None,
                     help="override the preset's fiber mode")
    sub.add_argument("--guard-slots", type=int, default=0,
                     help="extra guard slots appended to every demand")
    sub.add_argument("--modulation-file", default=None,
                     help="JSON file overriding the default modulation table")
    sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                     help="parallel trial workers (default: available CPUs)")
    sub.add_argument("--out", required=True, help="output directory for artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eonsim",
        description="Elastic optical network RMSA benchmarking experiments",
    )
    parser.add_argument("--version", action="version", version=f"eonsim {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("sweep", help="SBP against traffic load")
    _add_common_run_flags(s)
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("bound", help="defragmentation blocking bound and capacity gain")
    _add_common_run_flags(s)
    s.add_argument("--target-sbp", type=float, default=1e-3)
    s.add_argument("--record-outcomes", action="store_true",
                   help="also write a per-request outcome CSV")
    s.set_defaults(func=cmd_bound)

    s = subs.add_parser("warmup", help="MSER-5 warm-up length distribution")
    s.add_argument("--loads", required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_warmup)

    s = subs.add_parser("truncation-demo", help="holding-time truncation statistics")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_truncation_demo)

    s = subs.add_parser("paths", help="candidate-path audit")
    s.add_argument("--topology", required=True)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--ordering", choices=["km", "hops"], default="hops")
    s.add_argument("--slots", type=int, default=None)
    s.add_argument("--fiber-mode", choices=["dual", "single"], default=None)
    s.add_argument("--diagnose-orderings", action="store_true",
                   help="also report path overlap between km and hops orderings")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_paths)

    s = subs.add_parser("presets", help="print resolved problem-setting presets")
    s.add_argument("--preset", default=None)
    s.set_defaults(func=cmd_presets)

    s = subs.add_parser("rerun", help="replay a saved manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", default=None, help="redirect artifacts to a new directory")
    s.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, PresetError, TopologyError, TrafficConfigError, SimConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CrossingNotBracketedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
