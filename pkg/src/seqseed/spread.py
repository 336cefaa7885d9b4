"""Multilayer Independent Cascade on a coordinated instance, with three seeding schedules.

* ``SS``  - single stage: the top-k ranked actors are activated together.
* ``SQ``  - sequential: one seed per iteration, always the highest-ranked
  inactive actor, added after that iteration's spreading step.
* ``SQr`` - sequential with revival: a seed is added only in iterations whose
  spreading step activated nobody.

Activation is actor-global: reaching an actor on any layer activates it
everywhere, and each newly active actor gets exactly one attempt (in the next
iteration) over all its live out-directions on all layers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import TextIO

import numpy as np

from .instance import ActivationInstance, InstanceMismatchError
from .network import MultilayerNetwork, NetworkFormatError, degree_centrality, neighbourhood_size

SELECTIONS = ("degree", "neighbourhood", "random")
ACTIVATIONS = ("SS", "SQ", "SQr")

_SELECTION_ALIASES = {"degree": "degree", "neigh": "neighbourhood", "neighbourhood": "neighbourhood",
                      "neighborhood": "neighbourhood", "random": "random"}
_ACTIVATION_ALIASES = {"ss": "SS", "sq": "SQ", "sqr": "SQr"}


def normalize_selection(name: str) -> str:
    try:
        return _SELECTION_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown selection strategy {name!r}") from None


def normalize_activation(name: str) -> str:
    try:
        return _ACTIVATION_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown activation strategy {name!r}") from None


# --------------------------------------------------------------------------
# rankings and budgets
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SeedRanking:
    strategy: str
    order: np.ndarray  # actor indices, most important first
    rng_seed: int | None = None

    def __eq__(self, other):
        if not isinstance(other, SeedRanking):
            return NotImplemented
        return (self.strategy, self.rng_seed) == (other.strategy, other.rng_seed) and np.array_equal(
            self.order, other.order
        )

    __hash__ = None


def build_ranking(net: MultilayerNetwork, strategy: str, rng_seed: int | None = None) -> SeedRanking:
    """Rank all actors; measure ties are broken by ascending actor id."""
    strategy = normalize_selection(strategy)
    n = net.n_actors
    if strategy == "random":
        if rng_seed is None:
            raise ValueError("random ranking needs an rng_seed")
        order = np.random.default_rng(rng_seed).permutation(n)
        return SeedRanking(strategy, order.astype(np.int64), int(rng_seed))
    values = degree_centrality(net) if strategy == "degree" else neighbourhood_size(net)
    # indices follow ascending actor id, so the secondary key is the tie rule
    order = np.lexsort((np.arange(n), -values))
    return SeedRanking(strategy, order.astype(np.int64), None)


def save_ranking(ranking: SeedRanking, net: MultilayerNetwork, out: TextIO) -> None:
    out.write(f"STRATEGY: {ranking.strategy}\n")
    out.write(f"SEED: {'-' if ranking.rng_seed is None else ranking.rng_seed}\n")
    labels = net.actor_labels
    for i in ranking.order.tolist():
        out.write(f"{labels[i]}\n")


def load_ranking(source: TextIO | str, net: MultilayerNetwork) -> SeedRanking:
    if isinstance(source, str):
        source = io.StringIO(source)
    header: dict[str, str] = {}
    order: list[int] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if sep:
            if key.strip().upper() not in ("STRATEGY", "SEED") or order:
                raise NetworkFormatError(f"unexpected header {line!r}", lineno)
            header[key.strip().upper()] = value.strip()
            continue
        try:
            order.append(net.index_of(int(line)))
        except (ValueError, KeyError):
            raise NetworkFormatError(f"{line!r} is not an actor of the network", lineno) from None
    if "STRATEGY" not in header:
        raise NetworkFormatError("missing STRATEGY header")
    if sorted(order) != list(range(net.n_actors)):
        raise InstanceMismatchError("ranking is not a permutation of the network's actors")
    seed = header.get("SEED", "-")
    return SeedRanking(
        normalize_selection(header["STRATEGY"]),
        np.array(order, dtype=np.int64),
        None if seed == "-" else int(seed),
    )


def seed_budget(sc: float, n_actors: int) -> int:
    """Seed count for a fraction ``sc`` of ``n_actors``: round half up, at least one."""
    if not 0.0 < sc <= 1.0:
        raise ValueError(f"seed fraction {sc} outside (0, 1]")
    k = int((Decimal(str(sc)) * n_actors).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    return min(max(1, k), n_actors)


# --------------------------------------------------------------------------
# engine
# --------------------------------------------------------------------------


class LiveGraph:
    """Directed actor graph of the live transmissions of one instance.

    ``out[u]`` lists (ascending, deduplicated over layers) the actors ``u``
    activates when it gets its attempt.
    """

    __slots__ = ("out", "n", "labels")

    def __init__(self, net: MultilayerNetwork, inst: ActivationInstance):
        if inst.n_edges != net.n_edges:
            raise InstanceMismatchError(f"instance has {inst.n_edges} edges, network has {net.n_edges}")
        e, live = net.edges, inst.live
        src = np.concatenate([e[live[:, 0], 0], e[live[:, 1], 1]])
        dst = np.concatenate([e[live[:, 0], 1], e[live[:, 1], 0]])
        n = net.n_actors
        self.n = n
        self.labels = net.actor_labels
        out: list[list[int]] = [[] for _ in range(n)]
        if len(src):
            key = np.unique(src * n + dst)
            for s, d in zip((key // n).tolist(), (key % n).tolist()):
                out[s].append(d)
        self.out = out


@dataclass
class SpreadResult:
    """Outcome of one simulation; actors are reported by external label."""

    activated: frozenset[int]
    iterations: int
    seeds_used: int
    seeds_budget: int
    n_actors: int
    trace: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return len(self.activated) / self.n_actors

    @property
    def seeds(self) -> list[int]:
        return [a for seeded, _ in self.trace for a in seeded]

    def to_dict(self) -> dict:
        return {
            "activated": sorted(self.activated),
            "activated_count": len(self.activated),
            "actors": self.n_actors,
            "coverage": self.coverage,
            "iterations": self.iterations,
            "seeds_used": self.seeds_used,
            "seeds_budget": self.seeds_budget,
            "saved_seeds": saved_seeds(self),
            "trace": [{"seeded": list(s), "spread": list(p)} for s, p in self.trace],
        }


def _resolve_budget(budget, n: int) -> int:
    k = int(budget)
    if k < 1:
        raise ValueError("seed budget must be at least 1")
    if k > n:
        raise ValueError(f"seed budget {k} exceeds the {n} actors of the network")
    return k


def _step(out: list[list[int]], frontier: list[int], active: bytearray) -> list[int]:
    new = []
    for u in frontier:
        for v in out[u]:
            if not active[v]:
                active[v] = 1
                new.append(v)
    new.sort()
    return new


def _result(graph: LiveGraph, active: bytearray, iterations, used, k, trace) -> SpreadResult:
    labels = graph.labels
    return SpreadResult(
        activated=frozenset(labels[i] for i, a in enumerate(active) if a),
        iterations=iterations,
        seeds_used=used,
        seeds_budget=k,
        n_actors=graph.n,
        trace=[(tuple(labels[i] for i in s), tuple(labels[i] for i in p)) for s, p in trace],
    )


def run_single_stage(graph: LiveGraph, ranking: SeedRanking, budget: int) -> SpreadResult:
    k = _resolve_budget(budget, graph.n)
    active = bytearray(graph.n)
    seeds = sorted(ranking.order[:k].tolist())
    for s in seeds:
        active[s] = 1
    trace = [(seeds, [])]
    frontier, iterations = seeds, 0
    while True:
        new = _step(graph.out, frontier, active)
        if not new:
            break
        iterations += 1
        trace.append(([], new))
        frontier = new
    return _result(graph, active, iterations, k, k, trace)


def _run_staged(graph: LiveGraph, ranking: SeedRanking, budget: int, revival: bool) -> SpreadResult:
    k = _resolve_budget(budget, graph.n)
    order = ranking.order.tolist()
    active = bytearray(graph.n)
    pos = 0

    def next_seed():
        nonlocal pos
        while pos < len(order) and active[order[pos]]:
            pos += 1
        if pos == len(order):
            return None
        s = order[pos]
        active[s] = 1
        return s

    first = next_seed()
    trace = [([first], [])]
    frontier, used, iterations = [first], 1, 0
    while True:
        new = _step(graph.out, frontier, active)
        seeded = []
        if used < k and not (revival and new):
            s = next_seed()
            if s is not None:
                seeded.append(s)
                used += 1
        if not new and not seeded:
            break
        iterations += 1
        trace.append((seeded, new))
        frontier = new + seeded
    return _result(graph, active, iterations, used, k, trace)


def run_sequential(graph: LiveGraph, ranking: SeedRanking, budget: int) -> SpreadResult:
    return _run_staged(graph, ranking, budget, revival=False)


def run_sequential_revival(graph: LiveGraph, ranking: SeedRanking, budget: int) -> SpreadResult:
    return _run_staged(graph, ranking, budget, revival=True)


_RUNNERS = {"SS": run_single_stage, "SQ": run_sequential, "SQr": run_sequential_revival}


def run(graph: LiveGraph, ranking: SeedRanking, budget: int, activation: str) -> SpreadResult:
    return _RUNNERS[normalize_activation(activation)](graph, ranking, budget)


def saved_seeds(result: SpreadResult) -> float:
    """Unused fraction of the seeding budget."""
    return (result.seeds_budget - result.seeds_used) / result.seeds_budget
