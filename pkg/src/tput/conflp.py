"""Configuration LP: columns, pricing, solving, marginals, and the small exact solver.

A configuration is a block together with at most ``K`` admissible jobs and a
fixed schedule for them inside the block. The LP picks a convex combination
of configurations per block and lets each job be used at most once overall.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from . import colorcoding as cc
from .blocks import BlockSuperblockPartition, JobGeometry, job_geometry
from .core import Instance, Interval, Job, Placement, Schedule, derive_rng
from .greedy import eft_greedy

log = logging.getLogger(__name__)

PRICING_STREAM = 0x70726963
EXACT_STREAM = 0x65786163


class ConfigCapError(RuntimeError):
    """Explicit enumeration would exceed the configured column budget."""


@dataclass(frozen=True)
class Configuration:
    block: int
    entries: tuple[tuple[str, int, int], ...]  # (job id, machine, start), sorted by id

    @property
    def jobs(self) -> frozenset[str]:
        return frozenset(e[0] for e in self.entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    def schedule(self) -> Schedule:
        return Schedule({jid: Placement(mach, s) for jid, mach, s in self.entries})

    def key(self):
        return (self.block, tuple(sorted(self.jobs)))


@dataclass(frozen=True)
class DualPrices:
    alpha: dict[str, float]
    beta: tuple[float, ...]


@dataclass
class LPSolution:
    part: BlockSuperblockPartition
    configs: list[Configuration]
    x: np.ndarray
    objective: float
    duals: DualPrices
    geometry: dict[str, JobGeometry | None]
    mode: str
    K: int
    optimal: bool = True
    iterations: int = 0
    fail_prob: float = 0.0
    notes: list[str] = field(default_factory=list)

    def block_configs(self, b: int) -> list[tuple[Configuration, float]]:
        return [(c, float(v)) for c, v in zip(self.configs, self.x) if c.block == b]

    def reduced_cost(self, conf: Configuration) -> float:
        a = self.duals.alpha
        return conf.size - sum(a.get(j, 0.0) for j in conf.jobs) - self.duals.beta[conf.block]

    def to_dict(self) -> dict:
        cols = [{"block": c.block, "jobs": sorted(c.jobs), "x": float(v),
                 "schedule": [list(e) for e in c.entries]}
                for c, v in zip(self.configs, self.x) if v > 1e-12]
        return {
            "level": self.part.level, "K": self.K, "mode": self.mode, "optimal": self.optimal,
            "objective": self.objective, "iterations": self.iterations,
            "blocks": [[b.a, b.b] for b in self.part.blocks],
            "columns": cols,
            "alpha": {k: v for k, v in sorted(self.duals.alpha.items())},
            "beta": list(self.duals.beta),
            "notes": self.notes,
        }


def dumps_lp(sol: LPSolution) -> str:
    return json.dumps(sol.to_dict(), sort_keys=True, indent=1) + "\n"


# ------------------------------------------------------------ feasibility helpers

def _pack(jobs: Sequence[Job], block: Interval):
    """Starts for ``jobs`` run back to back in the given order, or None."""
    cur, out = block.a, []
    for j in jobs:
        s = max(cur, j.r)
        if s + j.p > min(j.d, block.b):
            return None
        out.append(s)
        cur = s + j.p
    return out


def sequence_in_block(jobs: Sequence[Job], block: Interval):
    """A feasible one-machine order for ``jobs`` inside ``block``.

    Tries deadline order first, then every permutation. Returns
    ``[(job, start)]`` or None.
    """
    order = sorted(jobs, key=lambda j: (j.d, j.id))
    starts = _pack(order, block)
    if starts is None:
        for perm in permutations(order):
            starts = _pack(perm, block)
            if starts is not None:
                order = list(perm)
                break
        else:
            return None
    return list(zip(order, starts))


def _machine_splits(n: int, m: int):
    """Assignments of ``n`` items to machines with machine labels in first-use order."""
    def rec(i, used, acc):
        if i == n:
            yield tuple(acc)
            return
        for mach in range(min(used + 1, m)):
            acc.append(mach)
            yield from rec(i + 1, max(used, mach + 1), acc)
            acc.pop()
    yield from rec(0, 0, [])


def witness(jobs: Sequence[Job], block: Interval, m: int = 1):
    """Canonical ``(id, machine, start)`` entries for ``jobs`` in ``block``, or None."""
    for split in _machine_splits(len(jobs), m):
        entries = []
        for mach in range(m):
            part = [j for j, s in zip(jobs, split) if s == mach]
            seq = sequence_in_block(part, block)
            if seq is None:
                break
            entries.extend((j.id, mach, s) for j, s in seq)
        else:
            return tuple(sorted(entries))
    return None


def admissible_candidates(inst: Instance, part: BlockSuperblockPartition, b: int,
                          geometry: Mapping[str, JobGeometry | None]) -> list[Job]:
    """Jobs that may appear in a configuration of block ``b``, in id order."""
    block = part.blocks[b]
    out = []
    for j in inst.schedulable_jobs():
        g = geometry.get(j.id)
        if g is not None and g.admissible(b, part) and j.fits(block):
            out.append(j)
    return out


# ------------------------------------------------------------ enumeration

def enumerate_configs(block: Interval, candidates: Sequence[Job], K: int, m: int = 1,
                      block_id: int = 0, max_columns: int = 200_000) -> list[Configuration]:
    """Every feasible subset of at most ``K`` candidates, each with one witness schedule.

    Subsets are grown one job at a time; an infeasible set has no feasible
    superset, so only feasible sets are extended.
    """
    cands = sorted((j for j in candidates if j.fits(block)), key=lambda j: j.id)
    out = [Configuration(block_id, ())]
    frontier = [((), -1)]
    for _ in range(K):
        nxt = []
        for idx, last in frontier:
            for i in range(last + 1, len(cands)):
                sub = idx + (i,)
                ent = witness([cands[t] for t in sub], block, m)
                if ent is None:
                    continue
                out.append(Configuration(block_id, ent))
                nxt.append((sub, i))
                if len(out) > max_columns:
                    raise ConfigCapError(f"more than {max_columns} configurations in block {block}")
        frontier = nxt
        if not frontier:
            break
    return out


# ------------------------------------------------------------ pricing

def use_exhaustive(n: int, k: int, fail_prob: float, exhaustive_max: int, prefer: bool,
                   n_limit: int = 12) -> bool:
    """One color per job when there are few jobs or when that is cheaper than sampling.

    ``n_limit`` bounds the table size of the exact pass when chosen on cost.
    """
    if n <= exhaustive_max:
        return True
    return prefer and n <= n_limit and (1 << n) <= cc.coloring_trials(k, fail_prob) * (1 << k)


def size_bound(jobs: Sequence[Job], capacity: int) -> int:
    """How many of the shortest jobs fit into ``capacity`` ticks in total."""
    tot, k = 0, 0
    for p in sorted(j.p for j in jobs):
        if tot + p > capacity:
            break
        tot += p
        k += 1
    return k


def lifted_windows(job: Job, region: Interval, m: int) -> list[tuple[int, int]]:
    """The job's window on each machine copy of ``region`` laid end to end."""
    L = len(region)
    w = job.window.intersect(region)
    return [(w.a + i * L, w.b + i * L) for i in range(m)]


def price_config(block: Interval, candidates: Sequence[Job], weights: Mapping[str, float], K: int,
                 m: int = 1, fail_prob: float = 1e-6, rng: np.random.Generator | None = None,
                 exhaustive_max: int = 8, block_id: int = 0, prefer_exhaustive: bool = True,
                 stop_above: float | None = None):
    """Heaviest configuration of ``block`` under job weights, by color coding.

    Returns ``(Configuration, weight)`` or None when no positive-weight
    configuration was found. With at most ``exhaustive_max`` useful
    candidates every job gets its own color and the answer is exact;
    otherwise ``k`` random colorings are tried often enough that a fixed
    optimum is missed with probability at most ``fail_prob``. With
    ``prefer_exhaustive`` the exact pass is also used whenever it is cheaper
    than the random trials. ``stop_above`` lets the caller accept the first
    coloring batch that beats a threshold instead of scanning every trial.
    """
    cands = [j for j in sorted(candidates, key=lambda j: j.id)
             if weights.get(j.id, 0.0) > 0 and j.fits(block)]
    if not cands or K <= 0 or block.empty:
        return None
    n = len(cands)
    L = len(block)
    cap = min(K, size_bound(cands, m * L), n)
    if cap == 0:
        return None
    w = np.array([weights[j.id] for j in cands], dtype=float)
    qp = np.stack([cc.latest_starts(lifted_windows(j, block, m), j.p, block.a, m * L + 1)
                   for j in cands])
    if use_exhaustive(n, cap, fail_prob, exhaustive_max, prefer_exhaustive):
        k = n
        colors = np.arange(n, dtype=np.int64)[None, :]
    else:
        k = cap
        rng = rng if rng is not None else np.random.default_rng(0)
        colors = rng.integers(0, k, size=(cc.coloring_trials(k, fail_prob), n), dtype=np.int64)
    val, t = cc.best_weight(colors, k, qp, w, cap, stop_above=stop_above)
    if t < 0 or val <= 0:
        return None
    picks = cc.trace_weight(colors[t], k, qp, w, cap)
    entries = []
    for j_idx, qs in picks:
        mach = qs // L
        entries.append((cands[j_idx].id, mach, block.a + qs - mach * L))
    conf = Configuration(block_id, tuple(sorted(entries)))
    return conf, float(sum(weights[e[0]] for e in conf.entries))


# ------------------------------------------------------------ LP

def _solve_master(configs: Sequence[Configuration], job_ids: Sequence[str], n_blocks: int,
                  tol: float):
    jpos = {j: i for i, j in enumerate(job_ids)}
    rows, cols = [], []
    for c_idx, c in enumerate(configs):
        for j in c.jobs:
            rows.append(jpos[j])
            cols.append(c_idx)
    nc = len(configs)
    A_ub = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(job_ids), nc)).tocsr()
    A_eq = coo_matrix((np.ones(nc), ([c.block for c in configs], range(nc))),
                      shape=(n_blocks, nc)).tocsr()
    cost = -np.array([c.size for c in configs], dtype=float)
    res = None
    for method in ("highs-ds", "highs-ipm"):
        res = linprog(cost, A_ub=A_ub if len(job_ids) else None,
                      b_ub=np.ones(len(job_ids)) if len(job_ids) else None,
                      A_eq=A_eq, b_eq=np.ones(n_blocks), bounds=(0, None), method=method)
        if res.status != 0:
            continue
        x = res.x
        viol = max(
            float(np.max(A_ub @ x - 1)) if len(job_ids) else 0.0,
            float(np.max(np.abs(A_eq @ x - 1))),
            float(-np.min(x)),
        )
        if viol <= tol:
            break
        log.warning("LP solution violates constraints by %.3g with %s; re-solving", viol, method)
    if res is None or res.status != 0:
        raise RuntimeError(f"configuration LP failed: {getattr(res, 'message', 'no result')}")
    alpha = -res.ineqlin.marginals if len(job_ids) else np.zeros(0)
    beta = -res.eqlin.marginals
    return np.clip(res.x, 0.0, None), -float(res.fun), np.clip(alpha, 0.0, None), beta


def solve_lp(inst: Instance, part: BlockSuperblockPartition, mode: str = "colgen", K: int | None = None,
             tol_lp: float = 1e-9, fail_prob: float = 1e-6, seed: int = 0, exhaustive_max: int = 8,
             max_iters: int = 200, max_columns: int = 200_000) -> LPSolution:
    """Solve the configuration LP of ``part`` over the schedulable jobs.

    ``K`` caps configuration size (default: the partition's own cap).
    ``mode="enumerate"`` lists every configuration; ``mode="colgen"`` starts
    from the empty configurations and adds columns of positive reduced cost
    found by :func:`price_config` until none is found.
    """
    if mode not in ("enumerate", "colgen"):
        raise ValueError(f"unknown LP mode {mode!r}")
    K = part.K if K is None else K
    geometry = job_geometry(inst, part)
    job_ids = [j.id for j in inst.schedulable_jobs()]
    nb = len(part.blocks)
    cands = [admissible_candidates(inst, part, b, geometry) for b in range(nb)]
    notes = []
    if mode == "enumerate":
        configs = []
        for b in range(nb):
            configs.extend(enumerate_configs(part.blocks[b], cands[b], K, inst.m, b,
                                             max_columns - len(configs)))
        x, obj, alpha, beta = _solve_master(configs, job_ids, nb, tol_lp)
        it, optimal = 1, True
    else:
        configs = [Configuration(b, ()) for b in range(nb)]
        seen = {c.key() for c in configs}
        optimal = False
        for it in range(1, max_iters + 1):
            x, obj, alpha, beta = _solve_master(configs, job_ids, nb, tol_lp)
            a = dict(zip(job_ids, alpha))
            added = 0
            for b in range(nb):
                w = {j.id: 1.0 - a[j.id] for j in cands[b]}
                got = price_config(part.blocks[b], cands[b], w, K, inst.m, fail_prob,
                                   derive_rng(seed, PRICING_STREAM, part.level, b, it),
                                   exhaustive_max, b, stop_above=beta[b] + tol_lp)
                if got is None:
                    continue
                conf, weight = got
                if weight - beta[b] > tol_lp and conf.key() not in seen:
                    configs.append(conf)
                    seen.add(conf.key())
                    added += 1
            if not added:
                optimal = True
                break
        if not optimal:
            notes.append(f"column generation stopped after {max_iters} rounds")
        else:
            notes.append(f"no improving column found; per block the pricing misses an "
                         f"existing one with probability <= {fail_prob:g}")
    duals = DualPrices(dict(zip(job_ids, map(float, alpha))), tuple(map(float, beta)))
    return LPSolution(part, configs, x, obj, duals, geometry, mode, K, optimal, it,
                      fail_prob if mode == "colgen" else 0.0, notes)


# ------------------------------------------------------------ marginals

@dataclass
class Marginals:
    y: dict[str, float]
    y_block: dict[tuple[str, int], float]
    y_machine_block: dict[tuple[str, int, int], float]
    y_left: dict[str, float]
    y_right: dict[str, float]
    y_super: dict[str, dict[int, float]]
    local: dict[str, bool]

    def decomposition_gap(self) -> float:
        """Largest ``|y_j - y_L - y_R - sum_S y_S|`` over jobs."""
        gap = 0.0
        for j, v in self.y.items():
            tot = self.y_left[j] + self.y_right[j] + sum(self.y_super[j].values())
            gap = max(gap, abs(v - tot))
        return gap


def marginals(sol: LPSolution, geometry: Mapping[str, JobGeometry | None] | None = None) -> Marginals:
    """Per-job LP mass, split by block, machine, boundary side and spanned superblock.

    ``y_super`` only counts blocks that are not boundary blocks of the job, so
    for every job ``y = y_left + y_right + sum(y_super)``. A local job's mass
    is all in ``y_left``.
    """
    geometry = sol.geometry if geometry is None else geometry
    part = sol.part
    y: dict[str, float] = {}
    yb: dict[tuple[str, int], float] = {}
    ymb: dict[tuple[str, int, int], float] = {}
    for c, v in zip(sol.configs, sol.x):
        if v <= 0:
            continue
        for jid, mach, _ in c.entries:
            y[jid] = y.get(jid, 0.0) + v
            yb[(jid, c.block)] = yb.get((jid, c.block), 0.0) + v
            ymb[(jid, mach, c.block)] = ymb.get((jid, mach, c.block), 0.0) + v
    yl, yr, ys, local = {}, {}, {}, {}
    for jid, g in geometry.items():
        if g is None:
            continue
        y.setdefault(jid, 0.0)
        local[jid] = g.local
        yl[jid] = yb.get((jid, g.release_block), 0.0)
        yr[jid] = 0.0 if g.local else yb.get((jid, g.deadline_block), 0.0)
        per = {}
        for s in g.spanned:
            tot = sum(yb.get((jid, b), 0.0) for b in part.blocks_of(s)
                      if b not in (g.release_block, g.deadline_block))
            if tot:
                per[s] = tot
        ys[jid] = per
    return Marginals(y, yb, ymb, yl, yr, ys, local)


# ------------------------------------------------------------ small exact solver

@dataclass
class ExactResult:
    schedule: Schedule
    exact: bool          # True when the search proved no larger schedule exists (w.h.p.)
    k_reached: int


def exact_small_opt(inst: Instance, k_max: int = 20, fail_prob: float = 1e-6, seed: int = 0,
                    exhaustive_max: int = 8, k_cap: int = 20,
                    prefer_exhaustive: bool = True, max_work: float = 5e8) -> ExactResult:
    """Maximum schedule when it has at most ``k_max`` jobs, by iterative deepening.

    For ``k`` from the greedy lower bound upward, color coding looks for a
    ``k``-job schedule over the whole horizon; the first ``k`` with no hit
    ends the search. With few jobs each job gets its own color and a single
    deterministic pass gives the optimum. The search also stops, with the
    result flagged as a lower bound, once a round has spent more than
    ``max_work`` table updates without finding a ``k``-job schedule.
    """
    if k_max > k_cap:
        raise ValueError(f"k_max={k_max} exceeds the configured cap {k_cap}")
    jobs = inst.schedulable_jobs()
    if not jobs:
        return ExactResult(Schedule({}), True, 0)
    m = inst.m
    lo, hi = min(j.r for j in jobs), max(j.d for j in jobs)
    span = hi - lo
    p = np.array([j.p for j in jobs], dtype=np.int64)
    # machine i owns [lo + i*span, lo + (i+1)*span) on the line
    windows = np.array([[(j.r + i * span, j.d + i * span) for i in range(m)] for j in jobs],
                       dtype=np.int64)
    best, _ = eft_greedy(jobs, Interval(lo, hi), m)
    n = len(jobs)
    ub = min(n, size_bound(jobs, m * span))

    def to_schedule(seq):
        out = {}
        for j_idx, s in seq:
            mach = (s - lo) // span
            out[jobs[j_idx].id] = Placement(int(mach), int(s - mach * span))
        return Schedule(out)

    def exhaustive():
        colors = np.arange(n, dtype=np.int64)[None, :]
        g = cc.finish_dp(colors, n, p, windows, n, lo)[0]
        ok = np.flatnonzero(g < cc.BIG)
        sizes = np.array([bin(int(a)).count("1") for a in ok])
        A = int(ok[np.argmax(sizes)])
        sched = to_schedule(cc.trace_finish(colors[0], n, p, windows, n, lo, A))
        if sched.throughput < best.throughput:
            raise AssertionError("exhaustive DP below greedy")
        return ExactResult(sched, True, sched.throughput)

    k = best.throughput + 1
    if k <= min(k_max, ub) and use_exhaustive(n, k, fail_prob, exhaustive_max, prefer_exhaustive, 22):
        return exhaustive()
    while k <= min(k_max, ub):
        if use_exhaustive(n, k, fail_prob, 0, prefer_exhaustive, 22):
            return exhaustive()
        rng = derive_rng(seed, EXACT_STREAM, k)
        trials = cc.coloring_trials(k, fail_prob)
        per_trial = (1 << k) * n * m
        step = cc._chunk(trials, (1 << k) * n)
        full = (1 << k) - 1
        hit = None
        done = 0
        while done < trials and hit is None:
            if done and done * per_trial > max_work:
                return ExactResult(best, False, best.throughput)
            size = min(step, trials - done)
            colors = rng.integers(0, k, size=(size, n), dtype=np.int64)
            g = cc.finish_dp(colors, k, p, windows, k, lo)
            rows = np.flatnonzero(g[:, full] < cc.BIG)
            if len(rows):
                hit = colors[rows[0]]
            done += size
        if hit is None:
            return ExactResult(best, True, k - 1)
        best = to_schedule(cc.trace_finish(hit, k, p, windows, k, lo, full))
        k += 1
    # stopped by the size bound (exact) or by k_max (lower bound only)
    return ExactResult(best, k > ub, best.throughput)
