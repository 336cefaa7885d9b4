"""Multilayer network model, structural measures and the ``.mlnet`` text format.

A network is the quadruple (actors, layers, nodes, edges).  Actors carry
non-negative integer labels and layers carry text labels; internally both are
re-indexed densely in ascending label order so the spreading code can work on
plain arrays.  Edges are undirected, intra-layer, and stored canonically as
``(lower actor index, higher actor index, layer index)`` rows sorted
lexicographically.
"""

from __future__ import annotations

import hashlib
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class NetworkFormatError(ValueError):
    """Malformed network file; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NetworkValidationError(ValueError):
    """Structurally invalid network (cross-layer edge, self-loop, duplicate...)."""


def _layer_sort_key(name: str):
    # natural order so that l2 < l10
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


@dataclass(frozen=True, eq=False)
class MultilayerNetwork:
    """Immutable multilayer network.

    ``actor_labels[i]`` is the external id of actor index ``i`` (strictly
    increasing); ``layer_labels[l]`` the name of layer index ``l``.
    ``edges`` is an ``(m, 3)`` int array of canonical ``(a, b, layer)`` rows with
    ``a < b``.  ``nodes`` is an ``(v, 2)`` array of ``(actor, layer)`` rows and
    always includes every edge endpoint.
    """

    actor_labels: tuple[int, ...]
    layer_labels: tuple[str, ...]
    edges: np.ndarray
    nodes: np.ndarray
    name: str = ""
    _actor_index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_actor_index", {a: i for i, a in enumerate(self.actor_labels)})
        self.edges.setflags(write=False)
        self.nodes.setflags(write=False)

    @classmethod
    def from_labelled(
        cls,
        actors: Iterable[int],
        layers: Iterable[str],
        edges: Iterable[tuple[int, int, str]],
        nodes: Iterable[tuple[int, str]] = (),
        name: str = "",
    ) -> "MultilayerNetwork":
        """Build a network from external labels, validating every invariant.

        Actors and layers used by ``edges`` or ``nodes`` must appear in
        ``actors``/``layers``.
        """
        actor_labels = tuple(sorted(set(int(a) for a in actors)))
        if any(a < 0 for a in actor_labels):
            raise NetworkValidationError("actor ids must be non-negative integers")
        layer_labels = tuple(sorted(set(str(l) for l in layers), key=_layer_sort_key))
        a_idx = {a: i for i, a in enumerate(actor_labels)}
        l_idx = {l: i for i, l in enumerate(layer_labels)}

        rows = []
        for a, b, layer in edges:
            a, b, layer = int(a), int(b), str(layer)
            if a not in a_idx or b not in a_idx:
                raise NetworkValidationError(f"edge {a} {b} {layer}: undeclared actor")
            if layer not in l_idx:
                raise NetworkValidationError(f"edge {a} {b} {layer}: undeclared layer")
            if a == b:
                raise NetworkValidationError(f"edge {a} {b} {layer}: self-loop")
            ia, ib = sorted((a_idx[a], a_idx[b]))
            rows.append((ia, ib, l_idx[layer]))
        edge_arr = np.array(sorted(rows), dtype=np.int64).reshape(-1, 3)
        if len(edge_arr) > 1:
            dup = np.all(edge_arr[1:] == edge_arr[:-1], axis=1)
            if dup.any():
                ia, ib, il = edge_arr[1:][dup][0]
                raise NetworkValidationError(
                    f"duplicate edge {actor_labels[ia]} {actor_labels[ib]} {layer_labels[il]}"
                )

        node_set = set()
        for a, layer in nodes:
            a, layer = int(a), str(layer)
            if a not in a_idx or layer not in l_idx:
                raise NetworkValidationError(f"node {a}:{layer} references undeclared actor or layer")
            node_set.add((a_idx[a], l_idx[layer]))
        for ia, ib, il in edge_arr.tolist():
            node_set.add((ia, il))
            node_set.add((ib, il))
        node_arr = np.array(sorted(node_set), dtype=np.int64).reshape(-1, 2)
        return cls(actor_labels, layer_labels, edge_arr, node_arr, name=name)

    @property
    def n_actors(self) -> int:
        return len(self.actor_labels)

    @property
    def n_layers(self) -> int:
        return len(self.layer_labels)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index_of(self, actor: int) -> int:
        return self._actor_index[actor]

    def labelled_edges(self) -> list[tuple[int, int, str]]:
        al, ll = self.actor_labels, self.layer_labels
        return [(al[a], al[b], ll[l]) for a, b, l in self.edges.tolist()]

    def digest(self) -> str:
        """Short content hash of the canonical serialization."""
        return hashlib.sha256(dumps_network(self).encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return (
            self.actor_labels == other.actor_labels
            and self.layer_labels == other.layer_labels
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.nodes, other.nodes)
        )

    __hash__ = None


def degree_centrality(net: MultilayerNetwork) -> np.ndarray:
    """Number of edges incident to each actor, summed over all layers."""
    e = net.edges
    return np.bincount(e[:, :2].ravel(), minlength=net.n_actors).astype(np.int64)


def neighbourhood_size(net: MultilayerNetwork) -> np.ndarray:
    """Number of distinct actors adjacent to each actor on any layer."""
    pairs = np.unique(net.edges[:, :2], axis=0) if net.n_edges else net.edges[:, :2]
    return np.bincount(pairs.ravel(), minlength=net.n_actors).astype(np.int64)


def measure_table(net: MultilayerNetwork, values: np.ndarray) -> dict[int, int]:
    """Map external actor labels to measure values."""
    return dict(zip(net.actor_labels, (int(v) for v in values)))


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

_SECTIONS = ("ACTORS", "LAYERS", "NODES", "EDGES")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_actor(tok: str, lineno: int) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise NetworkFormatError(f"actor id {tok!r} is not an integer", lineno) from None
    if value < 0:
        raise NetworkFormatError(f"actor id {tok!r} is negative", lineno)
    return value


def load_network(source: TextIO | str, name: str = "") -> MultilayerNetwork:
    """Parse a network from a text stream (or a string holding the file body).

    Grammar::

        ACTORS: <id> [<id> ...]       optional, repeatable
        LAYERS: <layer> [<layer> ...] optional, repeatable
        NODES: <id>:<layer> [...]     optional, isolated nodes only
        EDGES:
        <actor_a> <actor_b> <layer>

    Actors and layers referenced by edges are declared implicitly.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    actors: set[int] = set()
    layers: set[str] = set()
    nodes: list[tuple[int, str]] = []
    edges: list[tuple[int, int, str]] = []
    in_edges = False
    for lineno, raw in enumerate(source, start=1):
        line = _strip(raw)
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().upper()
        if sep and key in _SECTIONS and " " not in head.strip():
            if key == "EDGES":
                if rest.strip():
                    raise NetworkFormatError("EDGES: header takes no values", lineno)
                in_edges = True
            elif in_edges:
                raise NetworkFormatError(f"{key}: section after EDGES", lineno)
            elif key == "ACTORS":
                actors.update(_parse_actor(t, lineno) for t in rest.split())
            elif key == "LAYERS":
                layers.update(rest.split())
            else:
                for tok in rest.split():
                    a, colon, layer = tok.partition(":")
                    if not colon or not layer:
                        raise NetworkFormatError(f"node {tok!r} must be <actor>:<layer>", lineno)
                    nodes.append((_parse_actor(a, lineno), layer))
            continue
        if not in_edges:
            raise NetworkFormatError(f"unexpected line before EDGES: {line!r}", lineno)
        parts = line.split()
        if len(parts) != 3:
            raise NetworkFormatError(f"edge line needs 3 fields, got {len(parts)}", lineno)
        a, b = _parse_actor(parts[0], lineno), _parse_actor(parts[1], lineno)
        edges.append((a, b, parts[2]))

    for a, b, layer in edges:
        actors.update((a, b))
        layers.add(layer)
    for a, layer in nodes:
        if a not in actors or layer not in layers:
            raise NetworkValidationError(f"node {a}:{layer} references undeclared actor or layer")
    return MultilayerNetwork.from_labelled(actors, layers, edges, nodes, name=name)


def save_network(net: MultilayerNetwork, out: TextIO) -> None:
    """Write ``net`` in canonical, byte-deterministic form."""
    al, ll = net.actor_labels, net.layer_labels
    out.write("ACTORS:" + "".join(f" {a}" for a in al) + "\n")
    out.write("LAYERS:" + "".join(f" {l}" for l in ll) + "\n")
    endpoint = set(map(tuple, net.edges[:, [0, 2]].tolist())) | set(map(tuple, net.edges[:, [1, 2]].tolist()))
    isolated = [(a, l) for a, l in net.nodes.tolist() if (a, l) not in endpoint]
    if isolated:
        out.write("NODES:" + "".join(f" {al[a]}:{ll[l]}" for a, l in isolated) + "\n")
    out.write("EDGES:\n")
    for a, b, l in net.edges.tolist():
        out.write(f"{al[a]} {al[b]} {ll[l]}\n")


def dumps_network(net: MultilayerNetwork) -> str:
    buf = io.StringIO()
    save_network(net, buf)
    return buf.getvalue()


def read_network(path, name: str | None = None) -> MultilayerNetwork:
    from pathlib import Path

    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return load_network(fh, name=path.stem if name is None else name)


def write_network(net: MultilayerNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        save_network(net, fh)
