"""Acceptance checks, one test per criterion.

Every test records a single ``C<k> PASS|FAIL`` line with the measured value,
the tolerance and the wall time, shown in the terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np

from tput import round_assign, round_match
from tput.blocks import job_geometry, manual_partition
from tput.conflp import (admissible_candidates, enumerate_configs, exact_small_opt, marginals,
                         price_config, solve_lp)
from tput.core import Instance, Interval, Job, check_feasible, derive_rng, gen_random, normalize
from tput.greedy import CapacityError, block_greedy_schedule, eft_greedy
from tput.oracle import exact_opt, max_matching_bf, max_weight_config_bf
from tput.pipeline import SolveConfig, solve
from tput.round_assign import apply_bad_events, assign_jobs, classify
from tput.round_match import BipartiteGraph, harmonic_grouping, max_matching, sample_configs

EPS = Fraction(1, 6)


def report(record, k, ok, detail, budget, t0):
    secs = time.perf_counter() - t0
    within = secs < budget
    record(f"C{k} {'PASS' if ok and within else 'FAIL'}  {detail}  [{secs:.1f}s / budget {budget}s]")
    assert within, f"C{k} over its {budget}s budget ({secs:.1f}s)"
    assert ok, detail


def random_partition(rng, T, K, max_cuts=4):
    cuts = sorted({0, T, *map(int, rng.integers(1, T, size=int(rng.integers(0, max_cuts + 1))))})
    supers = [0] + [c for c in cuts[1:-1] if rng.random() < 0.4] + [T]
    return manual_partition(cuts, supers, T, K)


def test_c1_feasibility_fuzz(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    cfg = SolveConfig(trials=1, max_config_size=2, fail_prob=1e-2, exact_first=False, k0=2, seed=0)
    bad, count, runs = [], 1000, 0
    for i in range(count):
        n, T, m = int(rng.integers(0, 41)), int(rng.integers(10, 201)), int(rng.integers(1, 3))
        inst = gen_random(n, T, m, ("uniform", 1, int(rng.integers(2, 12))),
                          ("uniform", 0, int(rng.integers(0, 20))), seed=i)
        work = normalize(inst) if inst.jobs else inst
        cand = {"greedy": eft_greedy(work.jobs, Interval(0, work.T), m)[0]}
        if work.T > 1:
            part = random_partition(rng, work.T, K=2)
            sol = solve_lp(work, part, "colgen", fail_prob=1e-2, seed=i)
            cand["match"] = round_match.run(work, part, sol, trials=1, seed=i)
            cand["assign"] = round_assign.run(work, part, sol, EPS, trials=1, seed=i)
        sched, _ = solve(inst, cfg)
        for name, s in cand.items():
            runs += 1
            if not check_feasible(work, s):
                bad.append((i, name))
        runs += 1
        if not check_feasible(inst, sched):
            bad.append((i, "pipeline"))
    report(record, 1, not bad, f"{count} instances, {runs} schedules, {len(bad)} infeasible (allowed 0)", 180, t0)


def test_c2_greedy_two_approx(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, bad = 1.0, 0
    for i in range(300):
        n, T, m = int(rng.integers(1, 13)), int(rng.integers(4, 41)), int(rng.integers(1, 3))
        inst = gen_random(n, T, m, ("uniform", 1, int(rng.integers(1, 9))), ("uniform", 0, 10), seed=2000 + i)
        g = eft_greedy(inst.jobs, Interval(0, inst.T), m)[0].throughput
        opt = exact_opt(inst).throughput
        bad += 2 * g < opt
        if g:
            worst = max(worst, opt / g)
    report(record, 2, bad == 0, f"300 instances, max OPT/greedy {worst:.3f}, {bad} violations of 2*greedy >= OPT", 120, t0)


def test_c3_exact_agreement(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    miss = 0
    for i in range(200):
        n, T, m = int(rng.integers(1, 11)), int(rng.integers(8, 41)), int(rng.integers(1, 3))
        inst = gen_random(n, T, m, seed=3000 + i)
        # random colorings only, no deterministic one-color-per-job shortcut
        res = exact_small_opt(inst, fail_prob=1e-6, seed=i, exhaustive_max=0, prefer_exhaustive=False)
        assert check_feasible(inst, res.schedule)
        miss += res.schedule.throughput != exact_opt(inst).throughput
    report(record, 3, miss <= 1, f"200 instances, {miss} mismatches (allowed 1), fail_prob 1e-6", 180, t0)


def test_c4_pricing_oracle(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    small = [0, 0]
    large = [0, 0]
    for case in range(500):
        m = 1 + case % 2
        # half the cases have more than 8 useful candidates, so random colorings are used
        many = case % 4 >= 2
        n = int(rng.integers(9, 16)) if many else int(rng.integers(1, 9))
        a = int(rng.integers(0, 6))
        blk = Interval(a, a + int(rng.integers(3, 13)))
        jobs = []
        for i in range(n):
            r = int(rng.integers(0, blk.b))
            jobs.append(Job(f"j{i:02d}", int(rng.integers(1, 6)), r, r + int(rng.integers(2, 14))))
        lo = 0.0 if many else -0.3
        w = {j.id: float(rng.uniform(lo, 1.0)) for j in jobs}
        K = int(rng.integers(1, 4))
        got = price_config(blk, jobs, w, K, m, fail_prob=1e-6, rng=derive_rng(4, case),
                           prefer_exhaustive=False)
        best = max_weight_config_bf(blk, [(j, w[j.id]) for j in jobs], K, m)[2]
        val = 0.0 if got is None else got[1]
        if got is not None:
            assert got[0].size <= K and check_feasible(Instance(tuple(jobs), m=m), got[0].schedule())
        useful = sum(1 for j in jobs if w[j.id] > 0 and j.fits(blk))
        bucket = small if useful <= 8 else large
        bucket[0] += 1
        bucket[1] += abs(val - best) <= 1e-9
    total_ok = small[1] + large[1]
    ok = small[0] == small[1] and total_ok >= 0.99 * 500 and large[0] >= 100
    report(record, 4, ok, f"500 cases: {total_ok}/500 match; exhaustive regime {small[1]}/{small[0]}, "
           f"random colorings {large[1]}/{large[0]} (need 99% overall, 100% exhaustive)", 120, t0)


def small_instance(rng, seed, n_max=8, T_max=24):
    n, m = int(rng.integers(2, n_max + 1)), int(rng.integers(1, 3))
    return normalize(gen_random(n, int(rng.integers(8, T_max + 1)), m, ("uniform", 1, 5),
                                ("uniform", 0, 6), seed=seed))


def test_c5_lp_modes_agree(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(100):
        inst = small_instance(rng, 5000 + i, n_max=10, T_max=30)
        part = random_partition(rng, inst.T, K=int(rng.integers(1, 4)))
        a = solve_lp(inst, part, "enumerate")
        b = solve_lp(inst, part, "colgen", seed=i)
        worst = max(worst, abs(a.objective - b.objective))
    report(record, 5, worst <= 1e-6, f"100 instances, max |enumerate - colgen| = {worst:.2e} (tol 1e-6)", 180, t0)


def best_selection(inst, part, K):
    """Best integral choice of one configuration per block with disjoint jobs."""
    geo = job_geometry(inst, part)
    states = {frozenset(): 0}
    for b, blk in enumerate(part.blocks):
        confs = enumerate_configs(blk, admissible_candidates(inst, part, b, geo), K, inst.m, b)
        nxt = {}
        for used, val in states.items():
            for c in confs:
                if used & c.jobs:
                    continue
                key = used | c.jobs
                if nxt.get(key, -1) < val + c.size:
                    nxt[key] = val + c.size
        states = nxt
    return max(states.values())


def test_c6_lp_at_least_ilp(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    cases = []
    for i in range(150):
        inst = small_instance(rng, 6000 + i)
        cases.append((inst, random_partition(rng, inst.T, K=int(rng.integers(1, 4)), max_cuts=2)))
    # three equal blocks with K=2 often give fractional optima
    for s in range(600):
        inst = normalize(gen_random(8, 18, 1 + s % 2, ("uniform", 2, 6), ("uniform", 0, 5), seed=s))
        T = inst.T
        if T >= 6:
            cuts = [0, T // 3, 2 * T // 3, T]
            cases.append((inst, manual_partition(cuts, [0, cuts[2], T], T, K=2)))
    viol, strict = 0, 0
    for inst, part in cases:
        lp = solve_lp(inst, part, "enumerate").objective
        ilp = best_selection(inst, part, part.K)
        viol += lp < ilp - 1e-9
        strict += lp > ilp + 1e-6
    report(record, 6, viol == 0, f"{len(cases)} instances (n<=8, <=3 blocks), {viol} with LP < ILP, "
           f"{strict} with LP strictly above ILP", 120, t0)


def test_c7_harmonic_grouping(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    bad = 0
    for i in range(1000):
        n = int(rng.integers(0, 40))
        ys = rng.uniform(0, 1, n) * (rng.random(n) < 0.8)
        items = [(f"j{k}", int(rng.integers(1, 20)), float(y)) for k, y in enumerate(ys)]
        k = int(rng.integers(2, 9))
        g = harmonic_grouping(items, Fraction(1, k))
        p = {jid: pv for jid, pv, _ in items}
        bad += not (g.c1_holds(p) and g.c2_holds() and len(g.groups) == k
                    and sum(map(len, g.groups)) == n)
    report(record, 7, bad == 0, f"1000 y-vectors, {bad} violating (C1)/(C2)", 10, t0)


def test_c8_mean_inequality(record):
    t0 = time.perf_counter()
    grid = np.round(np.arange(0, 101) / 100, 2)
    a, b = np.meshgrid(grid, grid)
    mask = a + b <= 1 + 1e-12
    lhs = (a + b)[mask]
    rhs = (4 / 3 * (a + b - a * b))[mask]
    worst = float(np.max(lhs - rhs))
    eq = abs(1.0 - 4 / 3 * (1.0 - 0.25))
    ok = worst <= 1e-12 and eq <= 1e-12
    report(record, 8, ok, f"{int(mask.sum())} grid points, max(lhs-rhs) {worst:.2e}, gap at (0.5,0.5) {eq:.1e}", 1, t0)


def test_c9_matching(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(200):
        nl, nr, p = int(rng.integers(0, 13)), int(rng.integers(0, 13)), rng.uniform(0.02, 0.7)
        adj = [[k for k in range(nr) if rng.random() < p] for _ in range(nl)]
        g = BipartiteGraph([f"l{i}" for i in range(nl)], [None] * nr, adj)
        mt = max_matching(g)
        valid = len(set(mt.values())) == len(mt) and all(k in adj[i] for i, k in mt.items())
        bad += not valid or len(mt) != max_matching_bf(g)
    report(record, 9, bad == 0, f"200 graphs (<=12 per side), {bad} disagreements", 30, t0)


def boundary_jobs(rng, blk, n):
    """Global-job shapes for one block: release inside, deadline inside, or spanning."""
    s, t = blk.a, blk.b
    out = []
    for i in range(n):
        p = int(rng.integers(1, max(2, (t - s) // 2)))
        kind = rng.integers(0, 3)
        if kind == 0:   # release block
            r = int(rng.integers(s, t - p + 1))
            d = t + int(rng.integers(1, 20))
        elif kind == 1:  # deadline block
            d = int(rng.integers(s + p, t + 1))
            r = s - int(rng.integers(1, 20))
        else:
            r, d = s - int(rng.integers(0, 10)), t + int(rng.integers(0, 10))
        out.append(Job(f"j{i:02d}", p, r, d))
    return out


def test_c10_alteration_soundness(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    fails, fired = 0, 0
    for _ in range(1000):
        s = int(rng.integers(0, 50))
        blk = Interval(s, s + int(rng.integers(4, 60)))
        jobs = boundary_jobs(rng, blk, int(rng.integers(0, 12)))
        out = apply_bad_events(jobs, blk)
        fired += out.e_total or bool(out.e_left or out.e_right)
        keep = [j for j in jobs if j.id in set(out.survivors)]
        try:
            sched = block_greedy_schedule(*classify(keep, blk), blk)
        except CapacityError:
            fails += 1
            continue
        inside = all(blk.a <= pl.start and pl.start + j.p <= blk.b
                     for j in keep for pl in [sched.entries[j.id]])
        if not (check_feasible(Instance(tuple(jobs)), sched) and inside and sched.throughput == len(keep)):
            fails += 1
    report(record, 10, fails == 0, f"1000 trials ({fired} with a fired event), {fails} packing failures", 60, t0)


def find_probes(count=20):
    probes = []
    for s in range(2000):
        inst = normalize(gen_random(12, 30, 1 + s % 2, ("uniform", 2, 7), ("uniform", 0, 8), seed=s))
        T = inst.T
        if T < 8:
            continue
        cuts = [round(i * T / 4) for i in range(5)]
        part = manual_partition(cuts, [0, cuts[2], T], T, K=3)
        sol = solve_lp(inst, part, "colgen", seed=s)
        marg = marginals(sol)
        hits = [(j, b, v) for (j, b), v in sorted(marg.y_block.items())
                if not marg.local[j] and 0.02 < v < 0.98]
        for j, b, v in hits[:2]:
            probes.append((inst, sol, marg, j, b, v))
        if len(probes) >= count:
            return probes[:count]
    return probes


def test_c11_sampling_marginals(record):
    t0 = time.perf_counter()
    probes = find_probes()
    draws, bad, worst = 10_000, 0, 0.0
    scale = 1 - 2 * float(EPS)
    for idx, (inst, sol, marg, j, b, y) in enumerate(probes):
        in_conf = assigned = 0
        for t in range(draws):
            in_conf += j in sample_configs(sol, derive_rng(11, idx, t))[b].jobs
            draw = assign_jobs(sol, eps=EPS, rng=derive_rng(111, idx, t), marg=marg)
            assigned += draw.assigned.get(j, (None,))[0] == b
        for emp, target in ((in_conf / draws, y), (assigned / draws, scale * y)):
            sigma = math.sqrt(target * (1 - target) / draws)
            z = abs(emp - target) / sigma if sigma else (0.0 if emp == target else math.inf)
            worst = max(worst, z)
            bad += z > 3
    ok = bad == 0 and len(probes) == 20
    report(record, 11, ok, f"{len(probes)} probes x {draws} draws, max |z| {worst:.2f} (limit 3), "
           f"{bad} outside 3 sigma", 120, t0)


def test_c12_ratio_report(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    ratios, below, match_r, assign_r, assign_zero = [], 0, [], [], 0
    for i in range(100):
        n, T, m = int(rng.integers(4, 16)), int(rng.integers(12, 65)), int(rng.integers(1, 3))
        inst = gen_random(n, T, m, seed=12000 + i)
        opt = exact_opt(inst).throughput
        greedy = eft_greedy(inst.jobs, Interval(0, inst.T), m)[0].throughput
        sched, _ = solve(inst, SolveConfig(seed=i))
        below += sched.throughput < greedy
        ratios.append(opt / sched.throughput)
        # the two roundings on their own, same LP solution, exact path disabled
        _, rep = solve(inst, SolveConfig(seed=i, mode="pseudo54", exact_first=False, k0=2,
                                         max_config_size=6))
        bm = max((v for k, v in rep.throughput.items() if k.startswith("match@")), default=0)
        ba = max((v for k, v in rep.throughput.items() if k.startswith("assign@")), default=0)
        match_r.append(opt / bm if bm else math.inf)
        assign_r.append(opt / ba if ba else math.inf)
        assign_zero += ba == 0
    mean = float(np.mean(ratios))
    q = lambda xs: "/".join(f"{np.quantile(xs, p):.2f}" for p in (0.5, 0.9, 1.0))
    detail = (f"mean OPT/ALG {mean:.3f} (limit 1.5), {below} below greedy; "
              f"match-only OPT/ALG median/p90/max {q(match_r)}; "
              f"assign-only scheduled 0 jobs on {assign_zero}/100")
    report(record, 12, mean <= 1.5 and below == 0, detail, 600, t0)
