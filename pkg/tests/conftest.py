from __future__ import annotations

from importlib import resources

import numpy as np
import pytest
from hypothesis import strategies as st

from seqseed.instance import read_instance
from seqseed.network import MultilayerNetwork, read_network

DATA = resources.files("seqseed") / "data"

TOY_DEGREE = (3, 7, 6, 9, 8, 6, 4, 4, 7, 5, 5)
TOY_NEIGHBOURHOOD = (2, 7, 4, 5, 4, 6, 2, 2, 4, 3, 3)


@pytest.fixture(scope="session")
def toy():
    with resources.as_file(DATA / "toy.mlnet") as p:
        return read_network(p, name="toy")


@pytest.fixture(scope="session")
def toy_instance(toy):
    with resources.as_file(DATA / "toy_walkthrough.inst") as p:
        return read_instance(p, toy)


@pytest.fixture(scope="session")
def aucs():
    with resources.as_file(DATA / "n1_aucs.mlnet") as p:
        return read_network(p, name="N1")


def random_network(rng: np.random.Generator, n_actors: int, n_layers: int, density: float,
                   isolated: int = 0) -> MultilayerNetwork:
    layers = [f"l{i}" for i in range(n_layers)]
    edges = [
        (a, b, layer)
        for layer in layers
        for a in range(n_actors)
        for b in range(a + 1, n_actors)
        if rng.random() < density
    ]
    return MultilayerNetwork.from_labelled(range(n_actors + isolated), layers, edges, name="rand")


@st.composite
def networks(draw, max_actors=12, max_layers=3):
    n = draw(st.integers(2, max_actors))
    n_layers = draw(st.integers(1, max_layers))
    layers = [f"L{i}" for i in range(n_layers)]
    candidates = [(a, b, l) for l in layers for a in range(n) for b in range(a + 1, n)]
    edges = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=40))
    labels = draw(st.lists(st.integers(0, 10_000), min_size=n, max_size=n, unique=True))
    relabel = dict(enumerate(labels))
    return MultilayerNetwork.from_labelled(
        labels, layers, [(relabel[a], relabel[b], l) for a, b, l in edges], name="hyp"
    )


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
