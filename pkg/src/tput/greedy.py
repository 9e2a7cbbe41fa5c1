"""Earliest-finishing-time greedy and the in-block three-class packer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Interval, Job, Placement, Schedule


class CapacityError(RuntimeError):
    """The in-block packer could not place its jobs."""


@dataclass
class GreedyTrace:
    accepted: list[tuple[str, int, int]] = field(default_factory=list)  # (id, start, finish)
    rejected: dict[str, str] = field(default_factory=dict)

    @property
    def finishes(self) -> list[int]:
        return [f for _, _, f in self.accepted]


def eft_greedy(jobs: Iterable[Job], region: Interval, m: int = 1) -> tuple[Schedule, GreedyTrace]:
    """Repeatedly add the job that can finish earliest; stop when none fits.

    Ties are broken by (finish, job id, machine index).
    """
    trace = GreedyTrace()
    items = []
    for j in sorted(jobs, key=lambda j: j.id):
        if not j.fits(region):
            trace.rejected[j.id] = "window does not fit region" if j.schedulable else "window shorter than p"
        else:
            items.append((j.id, j.p, ((j.r, j.d),)))
    placed, rest = eft_windows(items, region, m)
    out = {}
    for jid, mach, start, finish, _ in placed:
        out[jid] = Placement(mach, start)
        trace.accepted.append((jid, start, finish))
    for jid in rest:
        trace.rejected[jid] = "no room left"
    return Schedule(out), trace


def eft_windows(items: Sequence[tuple[str, int, Sequence[tuple[int, int]]]], region: Interval,
                m: int = 1) -> tuple[list[tuple[str, int, int, int, int]], list[str]]:
    """EFT greedy where each job may run inside any one of several windows.

    ``items`` holds ``(id, p, windows)``. Returns the accepted
    ``(id, machine, start, finish, window index)`` tuples in acceptance order
    and the ids left over. Accepted finishing times never decrease, so the
    earliest slot on a machine always starts at that machine's frontier: no
    earlier gap can host a job that finishes no sooner than the last one.
    """
    pending = list(items)
    frontier = [region.a] * m
    placed = []
    while pending:
        best = None
        for k, (jid, p, windows) in enumerate(pending):
            for w, (r, d) in enumerate(windows):
                hi = min(d, region.b)
                for i in range(m):
                    start = max(frontier[i], r)
                    finish = start + p
                    if finish <= hi:
                        key = (finish, jid, i, w)
                        if best is None or key < best[0]:
                            best = (key, k, start)
        if best is None:
            break
        (finish, jid, i, w), k, start = best
        pending.pop(k)
        frontier[i] = finish
        placed.append((jid, i, start, finish, w))
    return placed, [it[0] for it in pending]


def block_greedy_schedule(left: Sequence[Job], right: Sequence[Job], mid: Sequence[Job],
                          block: Interval, machine: int = 0) -> Schedule:
    """Pack one block: left jobs from ``s`` by deadline, right jobs ending at ``t``
    by release, spanning jobs in id order in between.

    Raises :class:`CapacityError` when the total length exceeds the block or a
    left/right job lands outside its window.
    """
    s, t = block.a, block.b
    out: dict[str, Placement] = {}
    total = sum(j.p for j in (*left, *right, *mid))
    if total > t - s:
        raise CapacityError(f"block {block}: total processing {total} exceeds length {t - s}")
    cur = s
    for j in sorted(left, key=lambda j: (j.d, j.id)):
        if cur < j.r or cur + j.p > j.d:
            raise CapacityError(f"left job {j.id!r} misses its window at {cur}")
        out[j.id] = Placement(machine, cur)
        cur += j.p
    rights = sorted(right, key=lambda j: (j.r, j.id))
    end = t - sum(j.p for j in rights)
    right_start = end
    for j in rights:
        if end < j.r or end + j.p > j.d:
            raise CapacityError(f"right job {j.id!r} misses its window at {end}")
        out[j.id] = Placement(machine, end)
        end += j.p
    for j in sorted(mid, key=lambda j: j.id):
        if cur < j.r or cur + j.p > j.d:
            raise CapacityError(f"spanning job {j.id!r} misses its window at {cur}")
        out[j.id] = Placement(machine, cur)
        cur += j.p
    assert cur <= right_start
    return Schedule(out)
