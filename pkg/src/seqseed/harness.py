"""Experiment grid runner: networks x PP x instances x SC x selection x activation.

Instances are drawn once per (network, pp, instance) and shared by the 36 (or
|sc| x |selections| x |activations|) cases run on them; rankings are built once
per (network, selection).  Records come out in plan order, independent of the
number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import tomli

from . import __version__
from .instance import draw_instance
from .network import MultilayerNetwork, read_network
from .spread import (
    ACTIVATIONS,
    SELECTIONS,
    LiveGraph,
    build_ranking,
    normalize_activation,
    normalize_selection,
    run,
    saved_seeds,
    seed_budget,
)
from .synthgen import PRESETS, preset

log = logging.getLogger(__name__)

DEFAULT_PP = (0.01, 0.02, 0.03, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50)
DEFAULT_SC = (0.02, 0.05, 0.10, 0.20)

CSV_COLUMNS = (
    "network", "pp", "instance", "sc", "selection", "activation", "seeds_budget", "seeds_used",
    "activated", "actors", "coverage_pct", "iterations", "saved_seeds_pct",
)

_BUNDLED = {"TOY": "toy.mlnet", "N1": "n1_aucs.mlnet", "AUCS": "n1_aucs.mlnet"}


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    networks: list[str]
    pp_values: list[float] = field(default_factory=lambda: list(DEFAULT_PP))
    instance_count: int = 100
    sc_values: list[float] = field(default_factory=lambda: list(DEFAULT_SC))
    selections: list[str] = field(default_factory=lambda: list(SELECTIONS))
    activations: list[str] = field(default_factory=lambda: list(ACTIVATIONS))
    master_seed: int = 0
    attempts_per_direction: int = 1
    base_dir: str | None = None

    def __post_init__(self):
        for name in ("networks", "pp_values", "sc_values", "selections", "activations"):
            if not getattr(self, name):
                raise PlanError(f"{name} must not be empty")
        if any(not 0.0 <= p <= 1.0 for p in self.pp_values):
            raise PlanError("pp values must lie in [0, 1]")
        if any(not 0.0 < s <= 1.0 for s in self.sc_values):
            raise PlanError("sc values must lie in (0, 1]")
        if self.instance_count < 1:
            raise PlanError("instance_count must be at least 1")
        if self.attempts_per_direction < 1:
            raise PlanError("attempts_per_direction must be at least 1")
        try:
            self.selections = [normalize_selection(s) for s in self.selections]
            self.activations = [normalize_activation(a) for a in self.activations]
        except ValueError as exc:
            raise PlanError(str(exc)) from None
        self.pp_values = [float(p) for p in self.pp_values]
        self.sc_values = [float(s) for s in self.sc_values]

    @property
    def case_count(self) -> int:
        return (len(self.networks) * len(self.pp_values) * self.instance_count * len(self.sc_values)
                * len(self.selections) * len(self.activations))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def load_plan(path) -> ExperimentPlan:
    """Read a flat TOML plan whose keys mirror :class:`ExperimentPlan` fields."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise PlanError(f"{path}: {exc}") from None
    allowed = set(ExperimentPlan.__dataclass_fields__) - {"base_dir"}
    unknown = set(data) - allowed
    if unknown:
        raise PlanError(f"{path}: unknown plan key(s): {', '.join(sorted(unknown))}")
    if "networks" not in data:
        raise PlanError(f"{path}: plan needs a 'networks' list")
    try:
        return ExperimentPlan(**data, base_dir=str(path.parent))
    except TypeError as exc:
        raise PlanError(f"{path}: {exc}") from None


def resolve_network(ref: str, base_dir: str | None = None) -> MultilayerNetwork:
    """Bundled name (``toy``, ``N1``), synthetic preset (``N5``..``N10``) or file path."""
    key = ref.upper()
    if key in _BUNDLED:
        with resources.as_file(resources.files("seqseed") / "data" / _BUNDLED[key]) as p:
            return read_network(p, name=ref)
    if key in PRESETS:
        return preset(key)
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    return read_network(path, name=ref)


def _mix(master_seed: int, *words) -> int:
    ints = [int(master_seed) & (2**64 - 1)]
    ints += [zlib.crc32(w.encode()) if isinstance(w, str) else int(w) for w in words]
    return int(np.random.SeedSequence(ints).generate_state(1, dtype=np.uint64)[0])


def network_seed(master_seed: int, network_id: str) -> int:
    """Master seed for one network's instances."""
    return _mix(master_seed, network_id, "instances")


def ranking_seed(master_seed: int, network_id: str) -> int:
    return _mix(master_seed, network_id, "random-ranking")


@dataclass
class CaseRecord:
    network: str
    pp: float
    instance: int
    sc: float
    selection: str
    activation: str
    seeds_budget: int | None = None
    seeds_used: int | None = None
    activated: int | None = None
    actors: int | None = None
    coverage_pct: float | None = None
    iterations: int | None = None
    saved_seeds_pct: float | None = None
    error: str = ""

    @property
    def pair_key(self) -> tuple:
        return (self.network, self.pp, self.instance, self.sc, self.selection)

    def row(self) -> list[str]:
        def num(x, fmt):
            return "" if x is None else format(x, fmt)

        return [
            self.network, f"{self.pp:g}", str(self.instance), f"{self.sc:g}", self.selection,
            self.activation, num(self.seeds_budget, "d"), num(self.seeds_used, "d"),
            num(self.activated, "d"), num(self.actors, "d"), num(self.coverage_pct, ".6f"),
            num(self.iterations, "d"), num(self.saved_seeds_pct, ".6f"),
        ]


# per-process state so tasks only carry a small tuple
_CTX: dict = {}


def _init_worker(ctx: dict) -> None:
    _CTX.clear()
    _CTX.update(ctx)


def _run_shard(task: tuple[int, int, int]) -> list[CaseRecord]:
    ni, pi, inst_id = task
    plan: ExperimentPlan = _CTX["plan"]
    net_id, net = _CTX["networks"][ni]
    pp = plan.pp_values[pi]
    base = dict(network=net_id, pp=pp, instance=inst_id)
    try:
        inst = draw_instance(net, pp, inst_id, _CTX["net_seeds"][ni], plan.attempts_per_direction)
        graph = LiveGraph(net, inst)
    except Exception as exc:  # noqa: BLE001 - recorded, never dropped
        log.error("instance %s/%s/%s failed: %s", net_id, pp, inst_id, exc)
        graph = None
        shard_error = f"instance: {exc}"
    out = []
    for sc in plan.sc_values:
        for sel in plan.selections:
            for act in plan.activations:
                rec = CaseRecord(**base, sc=sc, selection=sel, activation=act)
                if graph is None:
                    rec.error = shard_error
                    out.append(rec)
                    continue
                try:
                    k = seed_budget(sc, net.n_actors)
                    res = run(graph, _CTX["rankings"][ni, sel], k, act)
                except Exception as exc:  # noqa: BLE001
                    log.error("case %s failed: %s", rec.pair_key + (act,), exc)
                    rec.error = str(exc) or type(exc).__name__
                    out.append(rec)
                    continue
                n_act = len(res.activated)
                rec.seeds_budget, rec.seeds_used = res.seeds_budget, res.seeds_used
                rec.activated, rec.actors = n_act, net.n_actors
                rec.coverage_pct = 100.0 * n_act / net.n_actors
                rec.iterations = res.iterations
                rec.saved_seeds_pct = 100.0 * saved_seeds(res)
                out.append(rec)
    return out


def run_plan(plan: ExperimentPlan, workers: int = 1, networks: dict | None = None) -> Iterator[CaseRecord]:
    """Yield every case record of ``plan`` in deterministic plan order.

    ``networks`` may map plan references to already-built networks.
    """
    networks = networks or {}
    nets = [(ref, networks.get(ref) or resolve_network(ref, plan.base_dir)) for ref in plan.networks]
    rankings = {}
    for ni, (ref, net) in enumerate(nets):
        for sel in plan.selections:
            seed = ranking_seed(plan.master_seed, ref) if sel == "random" else None
            rankings[ni, sel] = build_ranking(net, sel, seed)
    ctx = {
        "plan": plan,
        "networks": nets,
        "rankings": rankings,
        "net_seeds": [network_seed(plan.master_seed, ref) for ref, _ in nets],
    }
    tasks = [
        (ni, pi, i)
        for ni in range(len(nets))
        for pi in range(len(plan.pp_values))
        for i in range(plan.instance_count)
    ]
    if workers <= 1:
        _init_worker(ctx)
        for t in tasks:
            yield from _run_shard(t)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as ex:
        for recs in ex.map(_run_shard, tasks, chunksize=max(1, len(tasks) // (workers * 8))):
            yield from recs


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------


def write_csv(records: Iterable[CaseRecord], path) -> int:
    """Write records atomically; returns the row count."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    n = 0
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in records:
                w.writerow(rec.row())
                n += 1
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return n


def read_csv(path) -> list[CaseRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            def opt(name, cast):
                return cast(row[name]) if row[name] != "" else None

            rec = CaseRecord(
                row["network"], float(row["pp"]), int(row["instance"]), float(row["sc"]),
                row["selection"], row["activation"], opt("seeds_budget", int), opt("seeds_used", int),
                opt("activated", int), opt("actors", int), opt("coverage_pct", float),
                opt("iterations", int), opt("saved_seeds_pct", float),
            )
            if rec.coverage_pct is None:
                rec.error = "failed case"
            out.append(rec)
    return out


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(plan: ExperimentPlan, csv_path, manifest_path, started: datetime, inputs: dict) -> None:
    manifest = {
        "tool": "seqseed",
        "version": __version__,
        "plan": plan.to_dict(),
        "master_seed": plan.master_seed,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "inputs": inputs,
        "outputs": {str(csv_path): file_digest(csv_path)},
    }
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# aggregation
# --------------------------------------------------------------------------

AXES = {"by-network": "network", "by-pp": "pp", "by-sc": "sc", "by-selection": "selection"}


def pair_cases(records: Iterable[CaseRecord]) -> dict[tuple, dict[str, CaseRecord]]:
    """Group successful records by pair key into ``{activation: record}``."""
    pairs: dict[tuple, dict[str, CaseRecord]] = {}
    for r in records:
        if not r.error:
            pairs.setdefault(r.pair_key, {})[r.activation] = r
    return pairs


def duration_ratio(treated: CaseRecord, baseline: CaseRecord) -> tuple[float, bool]:
    """Iteration ratio against the SS baseline; zero-length baselines use (x+1)/(y+1)."""
    if baseline.iterations > 0:
        return treated.iterations / baseline.iterations, False
    return (treated.iterations + 1) / (baseline.iterations + 1), True


def aggregate(records: Iterable[CaseRecord], axis: str) -> list[dict]:
    """Mean coverage, saved seeds and duration ratios per value of ``axis``.

    All other parameters are averaged over.  Coverage and saved seeds are in
    percent; durations are mean paired ratios to SS in percent.
    """
    field_name = AXES.get(axis, axis)
    if field_name not in AXES.values():
        raise ValueError(f"unknown axis {axis!r}")
    pos = ("network", "pp", "instance", "sc", "selection").index(field_name)
    groups: dict = {}
    for key, acts in pair_cases(records).items():
        groups.setdefault(key[pos], []).append(acts)
    values = list(groups)
    if field_name in ("pp", "sc"):
        values.sort()
    rows = []
    for v in values:
        cases = groups[v]
        row = {field_name: v, "cases": len(cases)}
        for act in ACTIVATIONS:
            cov = [c[act].coverage_pct for c in cases if act in c]
            row[f"coverage_{act}"] = float(np.mean(cov)) if cov else float("nan")
        for act in ("SQ", "SQr"):
            saved = [c[act].saved_seeds_pct for c in cases if act in c]
            row[f"saved_{act}"] = float(np.mean(saved)) if saved else float("nan")
            matched = [duration_ratio(c[act], c["SS"]) for c in cases if act in c and "SS" in c]
            if any(act in c for c in cases) and not matched:
                raise ValueError(f"{field_name}={v}: no matched SS baselines for {act}")
            row[f"duration_{act}"] = 100.0 * float(np.mean([r for r, _ in matched])) if matched else float("nan")
            row[f"zero_baseline_{act}"] = sum(flag for _, flag in matched)
        rows.append(row)
    return rows


def paired_summary(records: Iterable[CaseRecord]) -> dict:
    """Headline comparisons of SQ and SQr against SS over all paired cases."""
    pairs = [c for c in pair_cases(records).values() if all(a in c for a in ACTIVATIONS)]
    ss = np.array([c["SS"].activated for c in pairs])
    sq = np.array([c["SQ"].activated for c in pairs])
    sqr = np.array([c["SQr"].activated for c in pairs])
    sq_ratio = [duration_ratio(c["SQ"], c["SS"])[0] for c in pairs]
    sqr_ratio = [duration_ratio(c["SQr"], c["SS"])[0] for c in pairs]
    return {
        "pairs": len(pairs),
        "dominance_sq_ss": float(np.mean(sq >= ss)),
        "dominance_sqr_sq": float(np.mean(sqr >= sq)),
        "sq_better": float(np.mean(sq > ss)),
        "sqr_better_than_sq": float(np.mean(sqr > sq)),
        "sq_saved_any": float(np.mean([c["SQ"].seeds_used < c["SQ"].seeds_budget for c in pairs])),
        "mean_coverage_SS": float(np.mean([c["SS"].coverage_pct for c in pairs])),
        "mean_coverage_SQ": float(np.mean([c["SQ"].coverage_pct for c in pairs])),
        "mean_coverage_SQr": float(np.mean([c["SQr"].coverage_pct for c in pairs])),
        "mean_saved_SQ": float(np.mean([c["SQ"].saved_seeds_pct for c in pairs])),
        "mean_duration_ratio_SQ": float(np.mean(sq_ratio)),
        "mean_duration_ratio_SQr": float(np.mean(sqr_ratio)),
    }


SORTED_GAIN_COLUMNS = (
    "network", "pp", "instance", "sc", "selection", "ss_coverage_pct", "sq_gain_pct",
    "sq_saved_seeds_pct", "sqr_gain_over_sq_pct", "sqr_saved_seeds_pct", "sq_duration_ratio",
)


def sorted_gain(records: Iterable[CaseRecord]) -> list[tuple]:
    """Per-case rows behind the sorted SS-vs-SQ overlay plots, by SS coverage."""
    rows = []
    for key, c in pair_cases(records).items():
        if not all(a in c for a in ACTIVATIONS):
            continue
        rows.append(key + (
            c["SS"].coverage_pct,
            c["SQ"].coverage_pct - c["SS"].coverage_pct,
            c["SQ"].saved_seeds_pct,
            c["SQr"].coverage_pct - c["SQ"].coverage_pct,
            c["SQr"].saved_seeds_pct,
            duration_ratio(c["SQ"], c["SS"])[0],
        ))
    rows.sort(key=lambda r: (r[5],) + r[:5])
    return rows
