"""Command line entry point: ``seqseed <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .harness import (
    AXES,
    SORTED_GAIN_COLUMNS,
    aggregate,
    file_digest,
    load_plan,
    read_csv,
    resolve_network,
    run_plan,
    sorted_gain,
    write_csv,
    write_manifest,
)
from .instance import draw_batch, read_instance, write_instance
from .network import write_network
from .spread import LiveGraph, build_ranking, load_ranking, run, save_ranking, seed_budget
from .stats import grouped_reports
from .synthgen import SynthSpec, generate

log = logging.getLogger("seqseed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def cmd_gen_synthetic(args) -> None:
    spec = SynthSpec(args.actors, args.layers, args.topology, edges_per_layer=args.edges_per_layer,
                     m=args.m, rng_seed=args.seed)
    net = generate(spec, name=Path(args.out).stem)
    write_network(net, args.out)
    log.info("wrote %s: %d actors, %d layers, %d edges", args.out, net.n_actors, net.n_layers, net.n_edges)


def cmd_gen_instances(args) -> None:
    net = resolve_network(args.net)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.net).stem
    for pp in args.pp:
        for inst in draw_batch(net, pp, args.count, args.master_seed, args.attempts):
            write_instance(inst, net, out_dir / f"{stem}_pp{pp:g}_{inst.instance_id:04d}.inst")
    log.info("wrote %d instances to %s", len(args.pp) * args.count, out_dir)


def cmd_rank(args) -> None:
    net = resolve_network(args.net)
    if args.strategy == "random" and args.seed is None:
        raise UsageError("--strategy random needs --seed")
    ranking = build_ranking(net, args.strategy, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        save_ranking(ranking, net, fh)


def cmd_run(args) -> None:
    net = resolve_network(args.net)
    inst = read_instance(args.instance, net)
    with open(args.ranking, encoding="utf-8") as fh:
        ranking = load_ranking(fh, net)
    result = run(LiveGraph(net, inst), ranking, seed_budget(args.sc, net.n_actors), args.activation)
    payload = result.to_dict()
    payload.update(activation=args.activation, sc=args.sc, pp=inst.pp, instance=inst.instance_id,
                   selection=ranking.strategy)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def cmd_run_plan(args) -> None:
    started = datetime.now(timezone.utc)
    plan = load_plan(args.plan)
    log.info("running %d cases", plan.case_count)
    n = write_csv(run_plan(plan, workers=args.workers), args.out)
    log.info("wrote %d records to %s", n, args.out)
    manifest = args.manifest or str(Path(args.out).with_suffix(".manifest.json"))
    write_manifest(plan, args.out, manifest, started, {str(args.plan): file_digest(args.plan)})


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def _write_table(header, rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def cmd_analyze(args) -> None:
    if not (args.table or args.stats or args.emit):
        raise UsageError("analyze needs one of --table, --stats or --emit")
    records = read_csv(args.results)
    out = sys.stdout
    if args.table:
        rows = aggregate(records, args.table)
        header = list(rows[0]) if rows else [AXES[args.table]]
        _write_table(header, [list(r.values()) for r in rows], out)
    if args.stats:
        reports = grouped_reports(records, args.axis, alternative=args.alternative)
        rows = [(r.label, r.value, r.delta, f"{r.p_value:.4g}", r.n) for r in reports]
        _write_table(("parameter", "value", "delta", "p_value", "n"), rows, out)
    if args.emit == "sorted-gain":
        _write_table(SORTED_GAIN_COLUMNS, sorted_gain(records), out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqseed", description="Sequential seeding experiments on multilayer networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    g = sub.add_parser("gen-synthetic", help="generate a synthetic multilayer network")
    g.add_argument("--actors", type=int, required=True)
    g.add_argument("--layers", type=int, required=True)
    g.add_argument("--topology", choices=("er", "sf"), required=True)
    size = g.add_mutually_exclusive_group(required=True)
    size.add_argument("--edges-per-layer", type=int)
    size.add_argument("--m", type=int)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_synthetic)

    g = sub.add_parser("gen-instances", help="draw coordinated-execution instances")
    g.add_argument("--net", required=True, help="network file or bundled name (toy, N1, N5..N10)")
    g.add_argument("--pp", type=_float_list, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--master-seed", type=int, required=True)
    g.add_argument("--attempts", type=int, default=1, help="independent draws per edge direction")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_gen_instances)

    g = sub.add_parser("rank", help="build a seed ranking")
    g.add_argument("--net", required=True)
    g.add_argument("--strategy", choices=("degree", "neigh", "neighbourhood", "random"), required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_rank)

    g = sub.add_parser("run", help="run one simulation on a stored instance")
    g.add_argument("--net", required=True)
    g.add_argument("--instance", required=True)
    g.add_argument("--ranking", required=True)
    g.add_argument("--sc", type=float, required=True)
    g.add_argument("--activation", choices=("ss", "sq", "sqr"), type=str.lower, required=True)
    g.add_argument("--out", required=True, help="result JSON path, or - for stdout")
    g.set_defaults(func=cmd_run)

    g = sub.add_parser("run-plan", help="run a full experiment plan")
    g.add_argument("--plan", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")
    g.set_defaults(func=cmd_run_plan)

    g = sub.add_parser("analyze", help="aggregate tables and statistics from a results CSV")
    g.add_argument("--results", required=True)
    g.add_argument("--table", choices=tuple(AXES))
    g.add_argument("--stats", action="store_true", help="Wilcoxon / Hodges-Lehmann SQ vs SS")
    g.add_argument("--axis", choices=("all", "pp", "sc", "selection", "network"), default="all")
    g.add_argument("--alternative", choices=("greater", "less", "two-sided"), default="greater")
    g.add_argument("--emit", choices=("sorted-gain",))
    g.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seqseed: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"seqseed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
