import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqseed.instance import ActivationInstance, draw_instance
from seqseed.network import load_network
from seqseed.spread import (
    LiveGraph,
    SeedRanking,
    build_ranking,
    load_ranking,
    run,
    run_sequential,
    run_sequential_revival,
    run_single_stage,
    save_ranking,
    saved_seeds,
    seed_budget,
    SpreadResult,
)

from conftest import networks, random_network
from replay import replay


def labels(net, ranking):
    return [net.actor_labels[i] for i in ranking.order]


def test_degree_ranking_toy(toy):
    order = labels(toy, build_ranking(toy, "degree"))
    assert order[:4] == [4, 5, 2, 9]
    assert order.index(3) < order.index(6)
    assert order == [4, 5, 2, 9, 3, 6, 10, 11, 7, 8, 1]


def test_neighbourhood_ranking_toy(toy):
    assert labels(toy, build_ranking(toy, "neigh"))[:2] == [2, 6]


def test_random_ranking(toy):
    r = build_ranking(toy, "random", rng_seed=3)
    assert sorted(r.order.tolist()) == list(range(11))
    assert r == build_ranking(toy, "random", rng_seed=3)
    with pytest.raises(ValueError):
        build_ranking(toy, "random")


@settings(max_examples=50, deadline=None)
@given(net=networks(), strategy=st.sampled_from(["degree", "neighbourhood"]))
def test_ranking_invariants(net, strategy):
    from seqseed.network import degree_centrality, neighbourhood_size

    r = build_ranking(net, strategy)
    values = (degree_centrality if strategy == "degree" else neighbourhood_size)(net)[r.order]
    assert sorted(r.order.tolist()) == list(range(net.n_actors))
    for (v1, i1), (v2, i2) in itertools.pairwise(zip(values, r.order)):
        assert v1 > v2 or (v1 == v2 and net.actor_labels[i1] < net.actor_labels[i2])


def test_ranking_roundtrip(toy):
    import io

    for r in (build_ranking(toy, "degree"), build_ranking(toy, "random", 17)):
        buf = io.StringIO()
        save_ranking(r, toy, buf)
        assert load_ranking(buf.getvalue(), toy) == r
    with pytest.raises(ValueError):
        load_ranking("STRATEGY: degree\nSEED: -\n4\n5\n", toy)


@pytest.mark.parametrize("sc, n, k", [(0.02, 61, 1), (0.05, 61, 3), (0.1, 61, 6), (0.2, 61, 12),
                                      (0.02, 1000, 20), (0.25, 10, 3), (0.05, 10, 1), (1.0, 7, 7)])
def test_seed_budget(sc, n, k):
    assert seed_budget(sc, n) == k


def test_ss_walkthrough(toy, toy_instance):
    res = run_single_stage(LiveGraph(toy, toy_instance), build_ranking(toy, "degree"), 2)
    assert res.seeds == [4, 5]
    assert len(res.activated) == 7
    assert res.iterations == 3
    assert saved_seeds(res) == 0


def test_sq_walkthrough(toy, toy_instance):
    res = run_sequential(LiveGraph(toy, toy_instance), build_ranking(toy, "degree"), 2)
    assert res.seeds == [4, 9]
    assert res.trace[1][1] == (2, 5)  # 4, 5 and 2 are active when 9 is picked
    assert len(res.activated) == 11 and res.coverage == 1.0
    assert res.iterations == 4


def test_sqr_walkthrough(toy, toy_instance):
    res = run_sequential_revival(LiveGraph(toy, toy_instance), build_ranking(toy, "degree"), 2)
    assert res.seeds == [4, 9]
    assert len(res.activated) == 11


def test_dead_instance(toy):
    g = LiveGraph(toy, draw_instance(toy, 0.0, 0, 0))
    r = build_ranking(toy, "degree")
    top = labels(toy, r)
    for k in (1, 3, 5):
        ss = run_single_stage(g, r, k)
        assert ss.activated == set(top[:k]) and ss.iterations == 0
    sq = run_sequential(g, r, 3)
    assert sq.activated == set(top[:3]) and len(sq.trace) == 3 and sq.seeds_used == 3
    sqr = run_sequential_revival(g, r, 2)
    assert sqr.activated == set(top[:2]) and sqr.seeds_used == 2


def _reachable(net, start):
    adj = {a: set() for a in net.actor_labels}
    for a, b, _ in net.labelled_edges():
        adj[a].add(b)
        adj[b].add(a)
    seen, todo = {start}, deque([start])
    while todo:
        u = todo.popleft()
        for v in adj[u] - seen:
            seen.add(v)
            todo.append(v)
    return seen


def test_full_instance_reaches_component():
    rng = np.random.default_rng(2)
    for _ in range(20):
        net = random_network(rng, 20, 2, 0.08, isolated=2)
        r = build_ranking(net, "degree")
        res = run_single_stage(LiveGraph(net, draw_instance(net, 1.0, 0, 0)), r, 1)
        assert res.activated == _reachable(net, net.actor_labels[r.order[0]])


def test_budget_exceeding_actors_rejected(toy, toy_instance):
    with pytest.raises(ValueError):
        run_single_stage(LiveGraph(toy, toy_instance), build_ranking(toy, "degree"), 12)


def test_saved_seeds_arithmetic():
    res = SpreadResult(frozenset(range(10)), 3, 1, 20, 10)
    assert saved_seeds(res) == pytest.approx(0.95)
    assert saved_seeds(SpreadResult(frozenset(range(10)), 3, 20, 20, 10)) == 0.0


def _check_result(net, inst, res, k):
    # every actor appears exactly once across the trace; ICM locality holds
    seen = [a for seeded, spread in res.trace for a in seeded + spread]
    assert len(seen) == len(set(seen)) and set(seen) == res.activated
    assert res.seeds_used <= k == res.seeds_budget
    if res.seeds_used < k:
        assert len(res.activated) == net.n_actors
    live_from = {}
    for (a, b, _), (ab, ba) in zip(net.labelled_edges(), inst.live.tolist()):
        if ab:
            live_from.setdefault(b, set()).add(a)
        if ba:
            live_from.setdefault(a, set()).add(b)
    frontier = set()
    active = set()
    for seeded, spread in res.trace:
        for v in spread:
            assert live_from.get(v, set()) & frontier
        active |= set(seeded) | set(spread)
        frontier = set(seeded) | set(spread)


@settings(max_examples=150, deadline=None)
@given(net=networks(max_actors=14), pp=st.sampled_from([0.1, 0.3, 0.5, 0.8]),
       seed=st.integers(0, 2**32 - 1), frac=st.floats(0.05, 1.0), sel=st.sampled_from(["degree", "random"]))
def test_strategy_properties(net, pp, seed, frac, sel):
    inst = draw_instance(net, pp, 0, seed)
    g = LiveGraph(net, inst)
    r = build_ranking(net, sel, seed)
    k = seed_budget(frac, net.n_actors)
    ss, sq, sqr = (run(g, r, k, a) for a in ("SS", "SQ", "SQr"))
    assert len(ss.activated) <= len(sq.activated) <= len(sqr.activated)
    assert ss.seeds_used == k and saved_seeds(ss) == 0
    for res in (ss, sq, sqr):
        _check_result(net, inst, res, k)
        assert run(g, r, k, "SS" if res is ss else ("SQ" if res is sq else "SQr")) == res
    if len(ss.activated) == len(sq.activated):
        assert sq.iterations >= ss.iterations
    if len(sq.activated) == len(sqr.activated):
        assert sqr.iterations >= sq.iterations
    one = [run(g, r, 1, a).activated for a in ("SS", "SQ", "SQr")]
    assert one[0] == one[1] == one[2]


def test_replay_oracle_matches_engine():
    rng = np.random.default_rng(7)
    for trial in range(100):
        net = random_network(rng, int(rng.integers(2, 31)), int(rng.integers(1, 4)), float(rng.uniform(0.05, 0.3)))
        inst = draw_instance(net, float(rng.uniform(0.05, 0.6)), trial, 11)
        r = build_ranking(net, "random", trial)
        k = int(rng.integers(1, net.n_actors + 1))
        g = LiveGraph(net, inst)
        for act in ("SS", "SQ", "SQr"):
            res = run(g, r, k, act)
            active, iterations, used = replay(net, inst, labels(net, r), k, act)
            assert res.activated == active
            assert (res.iterations, res.seeds_used) == (iterations, used)


def test_instance_network_mismatch(toy, aucs):
    with pytest.raises(ValueError):
        LiveGraph(toy, draw_instance(aucs, 0.1, 0, 0))
