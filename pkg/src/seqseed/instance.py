"""Coordinated execution: pre-drawn transmission choices for every edge direction.

An instance fixes, for each canonical edge ``(a, b, layer)``, whether ``a`` can
activate ``b`` and whether ``b`` can activate ``a``.  Every seeding strategy
run on the same instance therefore sees the same stochastic realization.

Seed policy: the per-instance seed is the first 64-bit word of
``numpy.random.SeedSequence([master_seed, round(pp * 1e6), instance_id])``.  The
instance's generator is ``numpy.random.default_rng(seed)`` and draws ``2 * |E|``
uniforms in canonical edge order, ``a->b`` before ``b->a``.  A direction is
live when its uniform is below ``pp``.

``attempts_per_direction`` (default 1) gives each direction several
independent chances, i.e. a live probability of ``1 - (1 - pp) ** attempts``;
this mimics edge lists that store every undirected edge once per direction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .network import MultilayerNetwork, NetworkFormatError


class InstanceMismatchError(ValueError):
    """Instance file does not describe the given network's edges."""


def derive_seed(master_seed: int, pp: float, instance_id: int) -> int:
    pp_key = int(round(pp * 1_000_000))
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), pp_key, int(instance_id)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class ActivationInstance:
    network_name: str
    pp: float
    instance_id: int
    seed: int
    n_edges: int
    packed: np.ndarray = field(repr=False)
    network_digest: str = ""
    attempts: int = 1

    @classmethod
    def from_live(cls, net: MultilayerNetwork, live: np.ndarray, pp: float, instance_id: int, seed: int,
                  attempts: int = 1, name: str | None = None):
        live = np.asarray(live, dtype=bool).reshape(net.n_edges, 2)
        return cls(net.name if name is None else name, float(pp), int(instance_id), int(seed), net.n_edges,
                   np.packbits(live.ravel()), net.digest(), int(attempts))

    @property
    def live(self) -> np.ndarray:
        """``(|E|, 2)`` boolean array: column 0 is ``a->b``, column 1 ``b->a``."""
        bits = np.unpackbits(self.packed, count=2 * self.n_edges).astype(bool)
        return bits.reshape(self.n_edges, 2)

    def __eq__(self, other):
        if not isinstance(other, ActivationInstance):
            return NotImplemented
        return (
            self.network_name == other.network_name
            and self.pp == other.pp
            and self.instance_id == other.instance_id
            and self.seed == other.seed
            and self.n_edges == other.n_edges
            and self.attempts == other.attempts
            and np.array_equal(self.packed, other.packed)
        )

    __hash__ = None


def draw_instance(
    net: MultilayerNetwork, pp: float, instance_id: int, master_seed: int, attempts_per_direction: int = 1
) -> ActivationInstance:
    if not 0.0 <= pp <= 1.0:
        raise ValueError(f"propagation probability {pp} outside [0, 1]")
    if attempts_per_direction < 1:
        raise ValueError("attempts_per_direction must be at least 1")
    seed = derive_seed(master_seed, pp, instance_id)
    u = np.random.default_rng(seed).random(2 * net.n_edges)
    p_live = pp if attempts_per_direction == 1 else 1.0 - (1.0 - pp) ** attempts_per_direction
    return ActivationInstance.from_live(net, u < p_live, pp, instance_id, seed, attempts_per_direction)


def draw_batch(
    net: MultilayerNetwork, pp: float, count: int, master_seed: int, attempts_per_direction: int = 1
) -> list[ActivationInstance]:
    if count < 1:
        raise ValueError("count must be at least 1")
    return [draw_instance(net, pp, i, master_seed, attempts_per_direction) for i in range(count)]


def save_instance(inst: ActivationInstance, net: MultilayerNetwork, out: TextIO) -> None:
    if inst.n_edges != net.n_edges:
        raise InstanceMismatchError(f"instance has {inst.n_edges} edges, network has {net.n_edges}")
    out.write(f"NETWORK: {inst.network_name or '-'}\n")
    out.write(f"PP: {inst.pp!r}\n")
    out.write(f"INSTANCE: {inst.instance_id}\n")
    out.write(f"SEED: {inst.seed}\n")
    if inst.attempts != 1:
        out.write(f"ATTEMPTS: {inst.attempts}\n")
    for (a, b, layer), (ab, ba) in zip(net.labelled_edges(), inst.live.tolist()):
        out.write(f"{a} {b} {layer} {int(ab)} {int(ba)}\n")


def dumps_instance(inst: ActivationInstance, net: MultilayerNetwork) -> str:
    buf = io.StringIO()
    save_instance(inst, net, buf)
    return buf.getvalue()


_HEADERS = {"NETWORK", "PP", "INSTANCE", "SEED"}
_OPTIONAL_HEADERS = {"ATTEMPTS"}


def load_instance(source: TextIO | str, net: MultilayerNetwork) -> ActivationInstance:
    """Parse an instance file and check it against ``net``'s canonical edge list."""
    if isinstance(source, str):
        source = io.StringIO(source)
    header: dict[str, str] = {}
    rows: list[tuple[tuple[int, int, str], tuple[bool, bool]]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if sep and key.strip().upper() in _HEADERS | _OPTIONAL_HEADERS:
            if rows:
                raise NetworkFormatError(f"{key.strip()} header after edge lines", lineno)
            header[key.strip().upper()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 5:
            raise NetworkFormatError(f"instance line needs 5 fields, got {len(parts)}", lineno)
        flags = parts[3:]
        if any(f not in ("0", "1") for f in flags):
            raise NetworkFormatError(f"direction flags must be 0 or 1, got {' '.join(flags)}", lineno)
        try:
            key_edge = (int(parts[0]), int(parts[1]), parts[2])
        except ValueError:
            raise NetworkFormatError(f"bad actor id in {line!r}", lineno) from None
        rows.append((key_edge, (flags[0] == "1", flags[1] == "1")))

    missing = _HEADERS - header.keys()
    if missing:
        raise NetworkFormatError(f"missing header(s): {', '.join(sorted(missing))}")
    try:
        pp = float(header["PP"])
        instance_id = int(header["INSTANCE"])
        seed = int(header["SEED"])
        attempts = int(header.get("ATTEMPTS", 1))
    except ValueError as exc:
        raise NetworkFormatError(f"bad header value: {exc}") from None

    if len(rows) != net.n_edges:
        raise InstanceMismatchError(f"instance lists {len(rows)} edges, network has {net.n_edges}")
    expected = net.labelled_edges()
    for i, ((edge, _), want) in enumerate(zip(rows, expected)):
        if edge != want:
            raise InstanceMismatchError(f"edge #{i} is {edge}, network has {want}")
    live = np.array([flags for _, flags in rows], dtype=bool).reshape(-1, 2)
    name = header["NETWORK"]
    return ActivationInstance.from_live(net, live, pp, instance_id, seed, attempts, "" if name == "-" else name)


def read_instance(path, net: MultilayerNetwork) -> ActivationInstance:
    with open(path, encoding="utf-8") as fh:
        return load_instance(fh, net)


def write_instance(inst: ActivationInstance, net: MultilayerNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        save_instance(inst, net, fh)
