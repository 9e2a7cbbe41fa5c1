"""Brute-force references for validating the solvers on tiny inputs.

Everything here is exhaustive and deliberately plain Python; it shares no
code with the solvers it checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .core import Instance, Interval, Job, Placement, Schedule


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_jobs: int = 15
    max_horizon: int = 64
    max_machines: int = 2

    def __post_init__(self):
        if min(self.max_jobs, self.max_horizon, self.max_machines) < 1:
            raise ValueError("oracle limits must be positive")


INF = float("inf")


def _single_machine_table(jobs: Sequence[Job], region: Interval):
    """Earliest finishing time of every subset run back to back on one machine.

    ``fin[mask]`` is the minimum, over all orders, of the completion time of
    the last job when each job starts as early as allowed (INF if no order
    works). Fixing the last job ``j`` of ``mask``, the rest should finish as
    early as possible, so the recursion over the last job is exact.
    """
    n = len(jobs)
    fin = [INF] * (1 << n)
    last = [-1] * (1 << n)
    fin[0] = region.a
    for mask in range(1, 1 << n):
        best, arg = INF, -1
        for i in range(n):
            bit = 1 << i
            if not mask & bit:
                continue
            prev = fin[mask ^ bit]
            if prev == INF:
                continue
            j = jobs[i]
            f = max(prev, j.r) + j.p
            if f <= min(j.d, region.b) and f < best:
                best, arg = f, i
        fin[mask] = best
        last[mask] = arg
    return fin, last


def _witness(jobs, fin, last, mask, machine, region) -> dict[str, Placement]:
    order = []
    while mask:
        i = last[mask]
        order.append(i)
        mask ^= 1 << i
    out, cur = {}, region.a
    for i in reversed(order):
        j = jobs[i]
        start = max(cur, j.r)
        out[j.id] = Placement(machine, start)
        cur = start + j.p
    return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _best_cover(n: int, feasible: list[bool], m: int, value):
    """Best value of a union of ``m`` disjoint feasible subsets.

    Returns ``(total, [mask per machine])``. ``value`` maps a mask to its
    additive score.
    """
    full = (1 << n) - 1
    # best1[mask]: best single feasible submask of mask (by value)
    best1 = [0] * (1 << n)
    arg1 = [0] * (1 << n)
    for mask in range(1 << n):
        if feasible[mask]:
            best1[mask], arg1[mask] = value(mask), mask
        b = mask
        while b:
            low = b & -b
            sub = mask ^ low
            if best1[sub] > best1[mask]:
                best1[mask], arg1[mask] = best1[sub], arg1[sub]
            b ^= low
    if m == 1:
        return best1[full], [arg1[full]]

    @lru_cache(maxsize=None)
    def rec(mask: int, k: int):
        if k == 1:
            return best1[mask], (arg1[mask],)
        best, parts = 0.0, (0,) * k
        sub = mask
        while True:
            if feasible[sub]:
                v, rest = rec(mask ^ sub, k - 1)
                tot = value(sub) + v
                if tot > best:
                    best, parts = tot, (sub,) + rest
            if sub == 0:
                break
            sub = (sub - 1) & mask
        return best, parts

    if m == 2:
        best, parts = 0.0, (0, 0)
        for a in range(1 << n):
            if feasible[a]:
                tot = value(a) + best1[full ^ a]
                if tot > best:
                    best, parts = tot, (a, arg1[full ^ a])
        return best, list(parts)
    total, parts = rec(full, m)
    return total, list(parts)


def exact_opt(inst: Instance, limits: OracleLimits = OracleLimits()) -> Schedule:
    """Maximum-cardinality feasible schedule by exhaustive subset search."""
    jobs = inst.schedulable_jobs()
    if len(jobs) > limits.max_jobs:
        raise OracleLimitError(f"{len(jobs)} jobs exceed oracle limit {limits.max_jobs}")
    if inst.m > limits.max_machines:
        raise OracleLimitError(f"m={inst.m} exceeds oracle limit {limits.max_machines}")
    if not jobs:
        return Schedule({})
    lo = min(j.r for j in jobs)
    hi = max(j.d for j in jobs)
    if hi - lo > limits.max_horizon:
        raise OracleLimitError(f"horizon {hi - lo} exceeds oracle limit {limits.max_horizon}")
    region = Interval(lo, hi)
    fin, last = _single_machine_table(jobs, region)
    feasible = [f != INF for f in fin]
    m = min(inst.m, len(jobs))
    _, parts = _best_cover(len(jobs), feasible, m, _popcount)
    out = {}
    for i, mask in enumerate(parts):
        out.update(_witness(jobs, fin, last, mask, i, region))
    return Schedule(out)


def max_weight_config_bf(block: Interval, candidates: Sequence[tuple[Job, float]], K: int,
                         m: int = 1, max_candidates: int = 15):
    """Heaviest set of at most ``K`` candidates schedulable inside ``block`` on ``m`` machines.

    Returns ``(ids, schedule, weight)``; the empty set (weight 0) is always allowed.
    """
    if len(candidates) > max_candidates:
        raise OracleLimitError(f"{len(candidates)} candidates exceed limit {max_candidates}")
    jobs = [c[0] for c in candidates]
    w = [float(c[1]) for c in candidates]
    n = len(jobs)
    if K <= 0 or n == 0:
        return frozenset(), Schedule({}), 0.0
    fin, last = _single_machine_table(jobs, block)
    feasible = [f != INF and _popcount(mask) <= K for mask, f in enumerate(fin)]

    def value(mask):
        return sum(w[i] for i in range(n) if mask >> i & 1)

    m = min(m, n)
    best, best_parts = 0.0, [0] * m
    if m == 1:
        for mask in range(1 << n):
            if feasible[mask] and value(mask) > best:
                best, best_parts = value(mask), [mask]
    else:
        # enumerate unions of size <= K and test whether m machines cover them
        for mask in range(1, 1 << n):
            if _popcount(mask) > K:
                continue
            v = value(mask)
            if v <= best:
                continue
            parts = _split_cover(mask, feasible, m)
            if parts is not None:
                best, best_parts = v, parts
    out = {}
    for i, mask in enumerate(best_parts):
        out.update(_witness(jobs, fin, last, mask, i, block))
    return frozenset(out), Schedule(out), best


def _split_cover(mask: int, feasible: list[bool], m: int):
    if m == 1:
        return [mask] if feasible[mask] else None
    sub = mask
    while True:
        if feasible[sub]:
            rest = _split_cover(mask ^ sub, feasible, m - 1)
            if rest is not None:
                return [sub] + rest
        if sub == 0:
            return None
        sub = (sub - 1) & mask


def max_matching_bf(graph, max_side: int = 12) -> int:
    """Maximum matching size by exhaustive search over (left vertex, used right set).

    ``graph`` needs ``n_left``, ``n_right`` and ``adj`` (right neighbours of
    each left vertex).
    """
    nl, nr = graph.n_left, graph.n_right
    if nl > max_side or nr > max_side:
        raise OracleLimitError(f"graph sides {nl}x{nr} exceed limit {max_side}")
    adj = [tuple(a) for a in graph.adj]

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> int:
        if i == nl:
            return 0
        top = best(i + 1, used)
        for k in adj[i]:
            if not used >> k & 1:
                top = max(top, 1 + best(i + 1, used | 1 << k))
        return top

    return best(0, 0)
