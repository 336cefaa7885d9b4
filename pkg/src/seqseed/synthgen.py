"""Synthetic multilayer networks: independent random layers over one actor set."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import networkx as nx
import numpy as np

from .network import MultilayerNetwork


@dataclass(frozen=True)
class SynthSpec:
    actor_count: int
    layer_count: int
    topology: str  # "erdos_renyi" | "scale_free"
    edges_per_layer: int | None = None
    m: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        topo = {"er": "erdos_renyi", "sf": "scale_free"}.get(self.topology, self.topology)
        object.__setattr__(self, "topology", topo)
        if self.actor_count < 2:
            raise ValueError("actor_count must be at least 2")
        if self.layer_count < 1:
            raise ValueError("layer_count must be at least 1")
        if topo == "erdos_renyi":
            if self.edges_per_layer is None or self.edges_per_layer < 1:
                raise ValueError("erdos_renyi layers need a positive edges_per_layer")
            if self.edges_per_layer > comb(self.actor_count, 2):
                raise ValueError(
                    f"{self.edges_per_layer} edges per layer is infeasible for "
                    f"{self.actor_count} actors (max {comb(self.actor_count, 2)})"
                )
        elif topo == "scale_free":
            if self.m is None or not 1 <= self.m < self.actor_count:
                raise ValueError("scale_free layers need 1 <= m < actor_count")
        else:
            raise ValueError(f"unknown topology {self.topology!r}")


def attachment_degree_for(actor_count: int, edges_per_layer: float) -> int:
    """Pick m so that a preferential-attachment layer has about ``edges_per_layer`` edges."""
    return min(range(1, actor_count), key=lambda m: (abs(m * (actor_count - m) - edges_per_layer), m))


def generate(spec: SynthSpec, name: str = "") -> MultilayerNetwork:
    """Generate a network whose layers are drawn independently from ``spec.rng_seed``.

    Every actor is a node on every layer.  Actor labels are permuted per layer
    so early-arriving hubs of a preferential-attachment layer are not the same
    actors on every layer.
    """
    n = spec.actor_count
    rng = np.random.default_rng(spec.rng_seed)
    layers = [f"l{i + 1}" for i in range(spec.layer_count)]
    edges = []
    for layer in layers:
        layer_seed = int(rng.integers(2**32))
        if spec.topology == "erdos_renyi":
            g = nx.gnm_random_graph(n, spec.edges_per_layer, seed=layer_seed)
        else:
            g = nx.barabasi_albert_graph(n, spec.m, seed=layer_seed)
        perm = rng.permutation(n)
        edges.extend((int(perm[u]), int(perm[v]), layer) for u, v in g.edges())
    nodes = [(a, layer) for layer in layers for a in range(n)]
    return MultilayerNetwork.from_labelled(range(n), layers, edges, nodes, name=name)


# Shapes of the six synthetic benchmark networks: per-layer ER edge counts are
# the reported totals split evenly; scale-free m matches the per-layer average.
PRESETS: dict[str, SynthSpec] = {
    "N5": SynthSpec(1000, 2, "erdos_renyi", edges_per_layer=round(5459 / 2), rng_seed=5),
    "N6": SynthSpec(1000, 3, "erdos_renyi", edges_per_layer=round(7136 / 3), rng_seed=6),
    "N7": SynthSpec(1000, 5, "erdos_renyi", edges_per_layer=round(15109 / 5), rng_seed=7),
    "N8": SynthSpec(1000, 2, "scale_free", m=attachment_degree_for(1000, 4223 / 2), rng_seed=8),
    "N9": SynthSpec(1000, 3, "scale_free", m=attachment_degree_for(1000, 5010 / 3), rng_seed=9),
    "N10": SynthSpec(1000, 5, "scale_free", m=attachment_degree_for(1000, 10181 / 5), rng_seed=10),
}


def preset(name: str) -> MultilayerNetwork:
    return generate(PRESETS[name.upper()], name=name.upper())
