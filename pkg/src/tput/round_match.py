"""Rounding by slots: sample one configuration per block, then match jobs to slots.

Every job of a sampled configuration leaves a slot, the interval it occupies
there. Any job whose window allows it can take over a slot, so a maximum
bipartite matching between jobs and slots yields the schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .blocks import inv_eps
from .conflp import Configuration, LPSolution
from .core import Instance, Interval, Job, Placement, Schedule, check_feasible, derive_rng

MATCH_STREAM = 0x6D61746368


@dataclass(frozen=True)
class Slot:
    interval: Interval
    block: int
    machine: int
    job: str


@dataclass
class BipartiteGraph:
    left: list[str]
    right: list[Slot]
    adj: list[list[int]]

    @property
    def n_left(self) -> int:
        return len(self.left)

    @property
    def n_right(self) -> int:
        return len(self.right)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(i, k) for i, ks in enumerate(self.adj) for k in ks}


def sample_configs(sol: LPSolution, rng: np.random.Generator, tol: float = 1e-7) -> dict[int, Configuration]:
    """One configuration per (non-dummy) block, drawn with probability ``x_C``."""
    by_block: dict[int, list[int]] = {}
    for idx, c in enumerate(sol.configs):
        by_block.setdefault(c.block, []).append(idx)
    out = {}
    for b in range(len(sol.part.blocks)):
        idx = by_block.get(b, [])
        x = np.array([sol.x[i] for i in idx], dtype=float)
        if len(x) and x.min() < -tol:
            raise ValueError(f"block {b}: negative LP weight {x.min():.3g}")
        x = np.clip(x, 0.0, None)
        tot = x.sum()
        if tot <= 0:
            out[b] = Configuration(b, ())
            continue
        out[b] = sol.configs[idx[int(rng.choice(len(idx), p=x / tot))]]
    return out


def build_slots(sampled: Mapping[int, Configuration], inst: Instance) -> list[Slot]:
    p = {j.id: j.p for j in inst.jobs}
    out = []
    for b in sorted(sampled):
        for jid, mach, s in sampled[b].entries:
            out.append(Slot(Interval(s, s + p[jid]), b, mach, jid))
    return out


def can_use(job: Job, slot: Slot) -> bool:
    iv = slot.interval
    return min(iv.b, job.d) - max(iv.a, job.r) >= job.p


def build_graph(jobs: Sequence[Job], slots: Sequence[Slot]) -> BipartiteGraph:
    jobs = [j for j in sorted(jobs, key=lambda j: j.id) if j.schedulable]
    adj = [[k for k, sl in enumerate(slots) if can_use(j, sl)] for j in jobs]
    return BipartiteGraph([j.id for j in jobs], list(slots), adj)


def max_matching(g: BipartiteGraph) -> dict[int, int]:
    """Maximum-cardinality matching as ``{left index: right index}`` (Hopcroft-Karp)."""
    if not g.n_left or not g.n_right:
        return {}
    rows = [i for i, ks in enumerate(g.adj) for _ in ks]
    cols = [k for ks in g.adj for k in ks]
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(g.n_left, g.n_right))
    match = maximum_bipartite_matching(mat, perm_type="column")
    return {i: int(k) for i, k in enumerate(match) if k >= 0}


def matching_to_schedule(matching: Mapping[int, int], g: BipartiteGraph, inst: Instance) -> Schedule:
    """Start each matched job as early as its slot allows."""
    by_id = inst.by_id
    out = {}
    for i, k in sorted(matching.items()):
        j, sl = by_id[g.left[i]], g.right[k]
        out[j.id] = Placement(sl.machine, max(sl.interval.a, j.r))
    sched = Schedule(out)
    rep = check_feasible(inst, sched)
    if not rep:
        raise RuntimeError(f"matching produced an infeasible schedule: {rep.violations[:3]}")
    return sched


@dataclass
class MatchTrial:
    seed_path: tuple[int, ...]
    slots: int
    matched: int


def run_trials(inst: Instance, sol: LPSolution, trials: int = 8, seed: int = 0):
    """Best schedule over ``trials`` independent roundings and per-trial stats."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = inst.schedulable_jobs()
    best, stats = Schedule({}), []
    for t in range(trials):
        path = (MATCH_STREAM, sol.part.level, t)
        sampled = sample_configs(sol, derive_rng(seed, *path))
        slots = build_slots(sampled, inst)
        g = build_graph(jobs, slots)
        sched = matching_to_schedule(max_matching(g), g, inst)
        stats.append(MatchTrial(path, len(slots), sched.throughput))
        if sched.throughput > best.throughput:
            best = sched
    return best, stats


def run(inst: Instance, part, sol: LPSolution, trials: int = 8, seed: int = 0) -> Schedule:
    if sol.part is not part and sol.part.key() != part.key():
        raise ValueError("LP solution was computed for a different partition")
    return run_trials(inst, sol, trials, seed)[0]


# ------------------------------------------------------------ diagnostics

@dataclass
class GroupingDiagnostics:
    order: list[str]                 # jobs by non-increasing p, ties by id
    thresholds: list[int]            # t(0..1/eps)
    groups: list[list[str]]
    mass: list[Fraction]             # n_l
    total: Fraction                  # Y*
    eps: Fraction
    sampled: list[float] = field(default_factory=list)

    def c1_holds(self, p: Mapping[str, int]) -> bool:
        for a, b in zip(self.groups, self.groups[1:]):
            if a and b and min(p[j] for j in a) < max(p[j] for j in b):
                return False
        return True

    def c2_holds(self) -> bool:
        lo, hi = self.eps * self.total - 1, self.eps * self.total + 1
        return all(lo <= n <= hi for n in self.mass)


def harmonic_grouping(items: Sequence[tuple[str, int, float]], eps) -> GroupingDiagnostics:
    """Split ``(id, p, y)`` into ``1/eps`` groups of near-equal mass, longest jobs first.

    ``t(l)`` is the largest prefix whose mass is at most ``l * eps * Y``;
    group ``l`` is the slice ``(t(l-1), t(l)]``. Arithmetic is exact.
    """
    k = inv_eps(eps, upper=None)
    e = Fraction(1, k)
    for jid, _, y in items:
        if not 0 <= y <= 1:
            raise ValueError(f"y for {jid!r} outside [0, 1]: {y}")
    order = sorted(items, key=lambda it: (-it[1], it[0]))
    ys = [Fraction(it[2]) for it in order]
    total = sum(ys, Fraction(0))
    prefix = [Fraction(0)]
    for y in ys:
        prefix.append(prefix[-1] + y)
    thresholds = [0]
    t = 0
    for lvl in range(1, k + 1):
        bound = lvl * e * total
        while t < len(ys) and prefix[t + 1] <= bound:
            t += 1
        thresholds.append(t)
    groups = [[it[0] for it in order[a:b]] for a, b in zip(thresholds, thresholds[1:])]
    mass = [prefix[b] - prefix[a] for a, b in zip(thresholds, thresholds[1:])]
    return GroupingDiagnostics([it[0] for it in order], thresholds, groups, mass, total, e)


def superblock_grouping(inst: Instance, sol: LPSolution, s: int, eps) -> GroupingDiagnostics:
    """Grouping of the jobs spanning superblock ``s`` by their LP mass inside it."""
    part = sol.part
    inside = set(part.blocks_of(s))
    mass: dict[str, float] = {}
    for c, v in zip(sol.configs, sol.x):
        if c.block in inside and v > 0:
            for jid in c.jobs:
                mass[jid] = mass.get(jid, 0.0) + float(v)
    items = []
    for j in inst.schedulable_jobs():
        g = sol.geometry.get(j.id)
        if g is not None and s in g.spanned:
            items.append((j.id, j.p, min(1.0, mass.get(j.id, 0.0))))
    return harmonic_grouping(items, eps)


def concentration_diag(inst: Instance, part, sol: LPSolution, superblock: int, trials: int,
                       seed: int = 0, eps=Fraction(1, 6)) -> dict:
    """Monte Carlo rate of ``N_l < (1 - eps) n_l - 2K/eps^3`` for each group.

    ``N_l`` counts jobs of group ``l`` in the configurations sampled for the
    blocks of the superblock. The rate is reported next to the bound ``eps^2``.
    Informational only.
    """
    if trials <= 0:
        return {}
    k = inv_eps(eps, upper=None)
    e = 1.0 / k
    grp = superblock_grouping(inst, sol, superblock, eps)
    member = {jid: lvl for lvl, g in enumerate(grp.groups) for jid in g}
    inside = set(part.blocks_of(superblock))
    margin = 2 * sol.K * k ** 3
    counts = np.zeros((trials, len(grp.groups)))
    for t in range(trials):
        sampled = sample_configs(sol, derive_rng(seed, MATCH_STREAM, 0x636F6E63, superblock, t))
        for b, c in sampled.items():
            if b in inside:
                for jid in c.jobs:
                    if jid in member:
                        counts[t, member[jid]] += 1
    n = np.array([float(x) for x in grp.mass])
    low = (1 - e) * n - margin
    rate = (counts < low[None, :] - 1e-9).mean(axis=0)
    return {
        "superblock": superblock, "trials": trials, "bound": e * e, "margin": margin,
        "groups": [{"size": len(g), "n": float(nv), "mean_N": float(counts[:, i].mean()),
                    "violation_rate": float(rate[i])}
                   for i, (g, nv) in enumerate(zip(grp.groups, grp.mass))],
    }


def diagnostic_report(inst: Instance, sol: LPSolution, trials: int = 8, seed: int = 0,
                      eps=Fraction(1, 6)) -> dict:
    """Per-trial matching sizes and per-superblock grouping stats."""
    _, stats = run_trials(inst, sol, trials, seed)
    supers = []
    for s in range(len(sol.part.superblocks)):
        grp = superblock_grouping(inst, sol, s, eps)
        supers.append({"superblock": s, "jobs": len(grp.order), "Y": float(grp.total),
                       "group_sizes": [len(g) for g in grp.groups],
                       "group_mass": [float(x) for x in grp.mass]})
    return {"level": sol.part.level,
            "trials": [{"slots": t.slots, "matched": t.matched} for t in stats],
            "superblocks": supers}


def dumps_report(rep: dict) -> str:
    return json.dumps(rep, sort_keys=True, indent=1) + "\n"
