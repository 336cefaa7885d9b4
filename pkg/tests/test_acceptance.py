"""Exit criteria.  Each test records a PASS/FAIL line shown in the terminal summary."""

import time

import numpy as np
import pytest

from seqseed.harness import ExperimentPlan, aggregate, paired_summary, run_plan, write_csv
from seqseed.instance import draw_instance
from seqseed.network import degree_centrality, measure_table, neighbourhood_size
from seqseed.spread import LiveGraph, build_ranking, run, run_sequential, run_single_stage
from seqseed.stats import hodges_lehmann, wilcoxon_signed_rank

from conftest import ACCEPTANCE, TOY_DEGREE, TOY_NEIGHBOURHOOD, random_network
from replay import replay
from test_stats import sign_enumeration_p, walsh_median


def record(name, ok, detail):
    ACCEPTANCE[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def desk_grid():
    plan = ExperimentPlan(networks=["N1", "N5", "N8"], instance_count=30, master_seed=2024)
    start = time.perf_counter()
    records = list(run_plan(plan))
    return plan, records, time.perf_counter() - start


def test_1_toy_measures(toy):
    start = time.perf_counter()
    deg = measure_table(toy, degree_centrality(toy))
    neigh = measure_table(toy, neighbourhood_size(toy))
    got_deg = tuple(deg[a] for a in range(1, 12))
    got_neigh = tuple(neigh[a] for a in range(1, 12))
    elapsed = time.perf_counter() - start
    record("1. toy measures", got_deg == TOY_DEGREE and got_neigh == TOY_NEIGHBOURHOOD and elapsed < 1,
           f"degree={got_deg} neighbourhood={got_neigh} in {elapsed:.3f}s")


def test_2_toy_walkthroughs(toy, toy_instance):
    start = time.perf_counter()
    g, r = LiveGraph(toy, toy_instance), build_ranking(toy, "degree")
    ss = run_single_stage(g, r, 2)
    sq = run_sequential(g, r, 2)
    elapsed = time.perf_counter() - start
    ok = (ss.seeds == [4, 5] and len(ss.activated) == 7 and ss.iterations == 3
          and len(sq.activated) == 11 and sq.iterations == 4 and sq.seeds == [4, 9] and elapsed < 1)
    record("2. toy walkthroughs", ok,
           f"SS {len(ss.activated)} actors/{ss.iterations} it; SQ {len(sq.activated)} actors/{sq.iterations} it, "
           f"seeds {sq.seeds}; {elapsed:.3f}s")


def test_3_dominance(desk_grid):
    plan, records, elapsed = desk_grid
    s = paired_summary(records)
    ok = s["dominance_sq_ss"] == 1.0 and s["dominance_sqr_sq"] == 1.0 and elapsed < 600
    record("3. dominance SQr >= SQ >= SS", ok,
           f"{s['pairs']} paired cases, SQ>=SS {100 * s['dominance_sq_ss']:.2f}%, "
           f"SQr>=SQ {100 * s['dominance_sqr_sq']:.2f}%, grid run {elapsed:.1f}s")


def test_4_aggregate_direction(desk_grid):
    _, records, _ = desk_grid
    s = paired_summary(records)
    ok = (s["mean_coverage_SQ"] > s["mean_coverage_SS"] and s["sq_better"] >= 0.55
          and s["sq_saved_any"] > 0.10 and s["mean_duration_ratio_SQ"] > 3)
    record("4. aggregate effects", ok,
           f"coverage SS {s['mean_coverage_SS']:.2f}% SQ {s['mean_coverage_SQ']:.2f}%, "
           f"SQ better {100 * s['sq_better']:.1f}%, saved>0 {100 * s['sq_saved_any']:.1f}%, "
           f"duration x{s['mean_duration_ratio_SQ']:.2f}")


N1_PUBLISHED = {"coverage_SS": 71, "coverage_SQ": 73, "coverage_SQr": 75, "saved_SQ": 13, "saved_SQr": 25}


def _n1_row(attempts):
    plan = ExperimentPlan(networks=["N1"], instance_count=100, master_seed=2024, attempts_per_direction=attempts)
    (row,) = aggregate(run_plan(plan), "by-network")
    return row


def test_5_n1_full_scale():
    row = _n1_row(1)
    off = {k: row[k] - v for k, v in N1_PUBLISHED.items()}
    detail = ", ".join(f"{k} {row[k]:.1f} (pub {N1_PUBLISHED[k]}, {off[k]:+.1f})" for k in N1_PUBLISHED)
    record("5. N1 Table III row within 3 pp", all(abs(d) <= 3 for d in off.values()), detail)


def test_n1_two_attempts_diagnostic():
    # not a criterion: two independent draws per direction, as if every edge
    # were listed once per direction in the source edge list
    row = _n1_row(2)
    off = {k: row[k] - v for k, v in N1_PUBLISHED.items()}
    assert all(abs(d) <= 3 for d in off.values()), off


def test_6_statistics_oracles():
    rng = np.random.default_rng(6)
    hl_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        d = rng.integers(-5, 10, size=n).astype(float) if rng.random() < 0.5 else rng.normal(1, 3, n)
        hl_ok &= hodges_lehmann(d) == walsh_median(d.tolist())
    w_ok = True
    for _ in range(300):
        d = rng.integers(-4, 6, size=int(rng.integers(1, 13))).astype(float)
        if np.any(d):
            w_ok &= abs(wilcoxon_signed_rank(d).p_value - sign_enumeration_p(d)) < 1e-12
    p5 = wilcoxon_signed_rank([1, 2, 3, 4, 5]).p_value
    record("6. statistics oracles", hl_ok and w_ok and p5 == 0.03125,
           f"HL==enumeration {hl_ok}, exact p==2^n enumeration {w_ok}, p(1..5)={p5}")


def test_7_coordinated_execution_oracle():
    rng = np.random.default_rng(77)
    mismatches = 0
    for trial in range(500):
        net = random_network(rng, int(rng.integers(2, 31)), int(rng.integers(1, 4)), float(rng.uniform(0.03, 0.3)))
        inst = draw_instance(net, float(rng.uniform(0.02, 0.7)), trial, 1234)
        ranking = build_ranking(net, ("degree", "neighbourhood", "random")[trial % 3], trial)
        order = [net.actor_labels[i] for i in ranking.order]
        k = int(rng.integers(1, net.n_actors + 1))
        g = LiveGraph(net, inst)
        for act in ("SS", "SQ", "SQr"):
            mismatches += run(g, ranking, k, act).activated != replay(net, inst, order, k, act)[0]
    record("7. coordinated-execution replay", mismatches == 0, f"500 trials x 3 strategies, {mismatches} mismatches")


def test_8_determinism(tmp_path):
    plan = ExperimentPlan(networks=["N1", "N8"], pp_values=[0.02, 0.2], instance_count=3, master_seed=77)
    write_csv(run_plan(plan), tmp_path / "a.csv")
    write_csv(run_plan(plan, workers=2), tmp_path / "b.csv")
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    record("8. determinism", same, "two executions (1 and 2 workers) byte-identical" if same else "CSV differs")


def test_9_grid_cardinality():
    small = ExperimentPlan(networks=["toy", "N1"], instance_count=2)
    n = sum(1 for _ in run_plan(small))
    full = ExperimentPlan(networks=[f"N{i}" for i in range(1, 11)])
    ok = n == 2 * 9 * 2 * 4 * 3 * 3 == small.case_count and full.case_count == 324_000
    record("9. grid cardinality", ok, f"2 networks x 2 instances -> {n} records; default 10-network plan "
                                      f"-> {full.case_count}")
