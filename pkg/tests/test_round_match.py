from fractions import Fraction

import numpy as np
import pytest

from tput.blocks import manual_partition
from tput.conflp import Configuration, solve_lp
from tput.core import Instance, Interval, Job, check_feasible, derive_rng, gen_random, normalize
from tput.oracle import max_matching_bf
from tput.round_match import (BipartiteGraph, Slot, build_graph, build_slots, concentration_diag,
                              diagnostic_report, harmonic_grouping, matching_to_schedule,
                              max_matching, run, run_trials, sample_configs)


def fake_solution(configs, x, part, inst):
    sol = solve_lp(inst, part, "enumerate")
    sol.configs = list(configs)
    sol.x = np.array(x, dtype=float)
    return sol


@pytest.fixture
def two_config():
    inst = Instance((Job("a", 2, 0, 10), Job("b", 3, 0, 10)))
    part = manual_partition([0, 10], [0, 10], 10, K=2)
    ca, cb = Configuration(0, (("a", 0, 0),)), Configuration(0, (("b", 0, 4),))
    return inst, part, ca, cb


def test_sample_single_and_degenerate(two_config):
    inst, part, ca, cb = two_config
    sol = fake_solution([ca], [1.0], part, inst)
    assert sample_configs(sol, np.random.default_rng(0))[0] == ca
    sol = fake_solution([ca, cb], [1.0, 0.0], part, inst)
    rng = np.random.default_rng(1)
    assert all(sample_configs(sol, rng)[0] == ca for _ in range(200))


def test_sample_half_half(two_config):
    inst, part, ca, cb = two_config
    sol = fake_solution([ca, cb], [0.5, 0.5], part, inst)
    rng = np.random.default_rng(2)
    hits = sum(sample_configs(sol, rng)[0] == ca for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) <= 0.02


def test_slots(two_config):
    inst, _, _, cb = two_config
    assert build_slots({0: Configuration(0, ())}, inst) == []
    inst = Instance((Job("j", 3, 0, 10),))
    (sl,) = build_slots({0: Configuration(0, (("j", 0, 4),))}, inst)
    assert sl.interval == Interval(4, 7)


def test_graph_edges():
    job = Job("j", 4, 3, 10)
    s1 = Slot(Interval(2, 8), 0, 0, "x")
    s2 = Slot(Interval(2, 6), 0, 0, "y")
    own = Slot(Interval(5, 9), 0, 0, "j")
    g = build_graph([job], [s1, s2, own])
    assert g.adj == [[0, 2]]


def rand_graph(rng, nl, nr, p):
    adj = [[k for k in range(nr) if rng.random() < p] for _ in range(nl)]
    return BipartiteGraph([f"l{i}" for i in range(nl)], [None] * nr, adj)


def test_matching_examples():
    full = BipartiteGraph(list("abcde"), [None] * 3, [[0, 1, 2]] * 5)
    assert len(max_matching(full)) == 3
    assert max_matching(BipartiteGraph(list("ab"), [None] * 2, [[], []])) == {}


def test_matching_vs_oracle():
    rng = np.random.default_rng(5)
    for _ in range(60):
        g = rand_graph(rng, int(rng.integers(0, 9)), int(rng.integers(0, 9)), rng.uniform(0.05, 0.6))
        mt = max_matching(g)
        assert len(set(mt.values())) == len(mt)
        assert all(k in g.adj[i] for i, k in mt.items())
        assert len(mt) == max_matching_bf(g)


def test_matching_to_schedule_starts():
    inst = Instance((Job("j", 2, 5, 12),))
    g = build_graph(inst.jobs, [Slot(Interval(4, 8), 0, 0, "x")])
    sched = matching_to_schedule({0: 0}, g, inst)
    assert sched.entries["j"].start == 5
    assert matching_to_schedule({}, g, inst).throughput == 0


def test_run_feasible_deterministic_monotone():
    inst = normalize(gen_random(10, 30, m=2, seed=8))
    part = manual_partition([0, 10, 20, inst.T], [0, 20, inst.T], inst.T, K=3)
    sol = solve_lp(inst, part, "colgen")
    a = run(inst, part, sol, trials=1, seed=3)
    assert a.entries == run(inst, part, sol, trials=1, seed=3).entries
    assert check_feasible(inst, a)
    prev = 0
    for t in (1, 2, 4, 8):
        s = run(inst, part, sol, trials=t, seed=3)
        assert s.throughput >= prev
        prev = s.throughput
    _, stats = run_trials(inst, sol, trials=3, seed=3)
    assert all(st.matched <= st.slots for st in stats)
    with pytest.raises(ValueError):
        run(inst, part, sol, trials=0)


def test_local_job_frequency():
    # a local job sits in its own block's sampled configuration with probability y_j
    inst = Instance((Job("a", 3, 0, 4), Job("b", 3, 0, 4)))
    part = manual_partition([0, 4], [0, 4], 4, K=1)
    sol = solve_lp(inst, part, "enumerate")
    ya = sum(v for c, v in zip(sol.configs, sol.x) if "a" in c.jobs)
    hits = sum("a" in sample_configs(sol, derive_rng(0, 9, t))[0].jobs for t in range(4000))
    sigma = (ya * (1 - ya) / 4000) ** 0.5
    assert abs(hits / 4000 - ya) <= 3 * sigma + 1e-9


def test_grouping_examples():
    zero = harmonic_grouping([(f"j{i}", i + 1, 0.0) for i in range(5)], Fraction(1, 6))
    assert all(m == 0 for m in zero.mass)
    items = [(f"j{i}", 10 - i, 1 / 6) for i in range(10)]
    g = harmonic_grouping(items, Fraction(1, 6))
    assert g.c2_holds() and g.c1_holds({j: p for j, p, _ in items})
    assert len(g.groups) == 6 and sum(map(len, g.groups)) == 10
    with pytest.raises(ValueError):
        harmonic_grouping([("a", 1, 1.5)], Fraction(1, 6))


def test_concentration_and_report():
    inst = normalize(gen_random(10, 30, seed=12))
    part = manual_partition([0, 10, 20, inst.T], [0, inst.T], inst.T, K=3)
    sol = solve_lp(inst, part, "enumerate")
    assert concentration_diag(inst, part, sol, 0, trials=0) == {}
    rep = concentration_diag(inst, part, sol, 0, trials=50, seed=1)
    assert rep["bound"] == pytest.approx(1 / 36)
    assert all(0 <= g["violation_rate"] <= 1 for g in rep["groups"])
    d = diagnostic_report(inst, sol, trials=2)
    assert len(d["trials"]) == 2 and d["superblocks"][0]["superblock"] == 0
