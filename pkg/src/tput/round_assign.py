"""Rounding by assignment: send each global job to one (block, machine), then repair.

A global job goes to ``(i, B)`` with probability ``(1 - 2 eps) y_{j,i,B}``.
Long jobs are dropped, and jobs whose block would overflow are removed by
three capacity checks (the bad events). What survives in a block is packed
by :func:`greedy.block_greedy_schedule`. Local jobs are left out entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .blocks import inv_eps
from .conflp import LPSolution, Marginals, marginals
from .core import Instance, Interval, Job, Schedule, derive_rng
from .greedy import CapacityError, block_greedy_schedule

ASSIGN_STREAM = 0x61737369


@dataclass
class AssignmentDraw:
    assigned: dict[str, tuple[int, int]]   # job -> (block, machine)
    discarded: list[str]

    def jobs_at(self, block: int, machine: int) -> list[str]:
        return sorted(j for j, bm in self.assigned.items() if bm == (block, machine))


@dataclass
class AlterationOutcome:
    block: Interval
    long: list[str] = field(default_factory=list)
    short: list[str] = field(default_factory=list)
    e_total: bool = False
    e_right: list[str] = field(default_factory=list)
    e_left: list[str] = field(default_factory=list)
    survivors: list[str] = field(default_factory=list)


def assign_jobs(sol: LPSolution, geometry=None, eps=Fraction(1, 6), rng: np.random.Generator | None = None,
                marg: Marginals | None = None, tol: float = 1e-7) -> AssignmentDraw:
    """Independent categorical draw per global job over its ``(block, machine)`` marginals."""
    k = inv_eps(eps, upper=None)
    scale = 1.0 - 2.0 / k
    rng = rng if rng is not None else np.random.default_rng(0)
    marg = marg if marg is not None else marginals(sol, geometry)
    per_job: dict[str, list[tuple[tuple[int, int], float]]] = {}
    for (jid, mach, b), v in sorted(marg.y_machine_block.items()):
        per_job.setdefault(jid, []).append(((b, mach), v))
    assigned, discarded = {}, []
    for jid in sorted(marg.local):
        if marg.local[jid]:
            continue
        opts = per_job.get(jid, [])
        probs = np.array([scale * max(v, 0.0) for _, v in opts])
        tot = probs.sum()
        if tot > 1 + tol:
            raise ValueError(f"job {jid!r}: assignment mass {tot:.6f} exceeds 1")
        u = rng.random()
        if tot > 0 and u < min(tot, 1.0):
            idx = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), len(opts) - 1)
            assigned[jid] = opts[idx][0]
        else:
            discarded.append(jid)
    return AssignmentDraw(assigned, discarded)


def split_long_short(jobs: Sequence[Job], block: Interval, eps=Fraction(1, 6)):
    """Long means ``p > eps^4 |tw(j) & block|``; returns ``(long, short)``."""
    e4 = Fraction(1, inv_eps(eps, upper=None)) ** 4
    long, short = [], []
    for j in jobs:
        (long if j.p > e4 * len(j.window.intersect(block)) else short).append(j)
    return long, short


def apply_bad_events(short: Sequence[Job], block: Interval) -> AlterationOutcome:
    """Drop short jobs whose block side or block total would overflow."""
    s, t = block.a, block.b
    out = AlterationOutcome(block, short=sorted(j.id for j in short))
    if sum(j.p for j in short) > t - s:
        out.e_total = True
        return out
    dropped = set()
    for j in short:
        if s < j.r < t:
            if sum(o.p for o in short if s < o.r < t and j.r <= o.r) > t - j.r:
                out.e_right.append(j.id)
                dropped.add(j.id)
        if s < j.d < t:
            if sum(o.p for o in short if s < o.d < t and o.d <= j.d) > j.d - s:
                out.e_left.append(j.id)
                dropped.add(j.id)
    out.e_right.sort()
    out.e_left.sort()
    out.survivors = sorted(j.id for j in short if j.id not in dropped)
    return out


def classify(jobs: Sequence[Job], block: Interval):
    """``(left, right, mid)``: deadline inside, release inside, spanning."""
    s, t = block.a, block.b
    left = [j for j in jobs if s < j.d < t]
    right = [j for j in jobs if s < j.r < t and not s < j.d < t]
    mid = [j for j in jobs if not s < j.d < t and not s < j.r < t]
    return left, right, mid


@dataclass
class AssignTrial:
    draw: AssignmentDraw
    outcomes: dict[tuple[int, int], AlterationOutcome]
    schedule: Schedule


def one_trial(inst: Instance, sol: LPSolution, eps, rng, marg: Marginals) -> AssignTrial:
    by_id = inst.by_id
    draw = assign_jobs(sol, eps=eps, rng=rng, marg=marg)
    groups: dict[tuple[int, int], list[Job]] = {}
    for jid, bm in draw.assigned.items():
        groups.setdefault(bm, []).append(by_id[jid])
    sched = Schedule({})
    outcomes = {}
    for (b, mach) in sorted(groups):
        block = sol.part.blocks[b]
        jobs = sorted(groups[(b, mach)], key=lambda j: j.id)
        long, short = split_long_short(jobs, block, eps)
        out = apply_bad_events(short, block)
        out.long = sorted(j.id for j in long)
        outcomes[(b, mach)] = out
        keep = [by_id[x] for x in out.survivors]
        left, right, mid = classify(keep, block)
        try:
            part = block_greedy_schedule(left, right, mid, block, mach)
        except CapacityError as exc:  # the bad events rule this out
            raise AssertionError(f"packing failed after alteration in {block}: {exc}") from exc
        sched = sched.merged(part)
    return AssignTrial(draw, outcomes, sched)


def run_trials(inst: Instance, sol: LPSolution, eps=Fraction(1, 6), trials: int = 8, seed: int = 0):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    marg = marginals(sol)
    best, reps = Schedule({}), []
    for t in range(trials):
        tr = one_trial(inst, sol, eps, derive_rng(seed, ASSIGN_STREAM, sol.part.level, t), marg)
        reps.append(tr)
        if tr.schedule.throughput > best.throughput:
            best = tr.schedule
    return best, reps


def run(inst: Instance, part, sol: LPSolution, eps=Fraction(1, 6), trials: int = 8, seed: int = 0) -> Schedule:
    if sol.part is not part and sol.part.key() != part.key():
        raise ValueError("LP solution was computed for a different partition")
    return run_trials(inst, sol, eps, trials, seed)[0]


def trial_report(trials: Sequence[AssignTrial]) -> list[dict]:
    """Per trial and per (block, machine): assigned/long/dropped/scheduled counts and fired events."""
    out = []
    for tr in trials:
        rows = []
        for (b, mach), o in sorted(tr.outcomes.items()):
            n_assigned = len(o.long) + len(o.short)
            rows.append({
                "block": b, "machine": mach, "assigned": n_assigned, "long": len(o.long),
                "dropped": len(o.short) - len(o.survivors), "scheduled": len(o.survivors),
                "events": (["E_total"] if o.e_total else [])
                + [f"E_right({j})" for j in o.e_right] + [f"E_left({j})" for j in o.e_left],
            })
        out.append({"throughput": tr.schedule.throughput, "discarded": len(tr.draw.discarded),
                    "blocks": rows})
    return out


def dumps_trial_report(trials: Sequence[AssignTrial]) -> str:
    return json.dumps(trial_report(trials), sort_keys=True, indent=1) + "\n"
