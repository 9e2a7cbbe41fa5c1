"""Elementary blocks and the nested block/superblock partitions.

Dummy blocks ``[T, T)`` used for padding are counted but never
materialized: the padding multiple grows like ``(2 K0 / eps^5)^(1/eps)``
and is astronomically large even for modest parameters.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Instance, Interval, Job
from .greedy import eft_windows


class ParameterError(ValueError):
    pass


def inv_eps(eps, upper: Fraction | None = Fraction(1, 6)) -> int:
    """Return ``1/eps`` after checking it is an integer and ``eps <= upper``."""
    if isinstance(eps, Fraction):
        f = eps
    else:
        f = Fraction(eps).limit_denominator(10**6)
        if abs(float(f) - float(eps)) > 1e-12:
            raise ParameterError(f"eps={eps!r} is not of the form 1/k")
    if f <= 0 or f.numerator != 1:
        raise ParameterError(f"eps={eps!r}: 1/eps must be a positive integer")
    if upper is not None and f > upper:
        raise ParameterError(f"eps={eps!r} exceeds {upper}")
    return f.denominator


def default_k0(eps, cap: int = 64) -> int:
    """``min(cap, ceil((1/eps)^((1/eps) ln(1/eps))))`` without overflowing."""
    k = inv_eps(eps, upper=None)
    log_val = k * math.log(k) * math.log(k)
    if log_val >= math.log(cap):
        return cap
    return min(cap, max(1, math.ceil(math.exp(log_val))))


@dataclass(frozen=True)
class BlockPartition:
    """Consecutive blocks covering ``[0, T)`` plus ``n_dummy`` trailing ``[T, T)``.

    ``tags`` mark each block as class ``"I"`` (it carries a fixed greedy
    schedule, listed in ``fixed`` as ``(id, start, finish)``) or ``"II"``.
    """
    blocks: tuple[Interval, ...]
    T: int
    n_dummy: int = 0
    tags: tuple[str, ...] = ()
    fixed: tuple[tuple[tuple[str, int, int], ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.tags:
            object.__setattr__(self, "tags", ("II",) * len(self.blocks))
        if not self.fixed:
            object.__setattr__(self, "fixed", ((),) * len(self.blocks))

    def __len__(self):
        return len(self.blocks) + self.n_dummy

    @property
    def cuts(self) -> list[int]:
        return [self.blocks[0].a] + [b.b for b in self.blocks]

    def check(self) -> None:
        cur = 0
        for b in self.blocks:
            if b.a != cur or (b.empty and self.T > 0):
                raise AssertionError(f"blocks not consecutive/nonempty at {b}")
            cur = b.b
        if cur != self.T:
            raise AssertionError(f"blocks end at {cur}, expected {self.T}")


def partition_from_cuts(cuts: Sequence[int], T: int) -> BlockPartition:
    pts = sorted({c for c in cuts if 0 <= c <= T} | {0, T})
    blocks = tuple(Interval(a, b) for a, b in zip(pts, pts[1:]))
    return BlockPartition(blocks or (Interval(0, T),), T)


# ------------------------------------------------------------ elementary blocks

def _split(block: Interval, placed: Sequence[tuple[str, int, int]], size: int):
    """Cut ``block`` after every ``size`` placed jobs (never after the last)."""
    pts = [block.a] + [placed[c - 1][2] for c in range(size, len(placed), size)] + [block.b]
    pieces, k = [], 0
    for a, b in zip(pts, pts[1:]):
        chunk = []
        while k < len(placed) and placed[k][2] <= b:
            chunk.append(placed[k])
            k += 1
        pieces.append((Interval(a, b), tuple(chunk)))
    return pieces


def _construct(items, horizon: int, base: int, k0: int, n_iter: int):
    """Greedy-driven block construction on one machine over ``[0, horizon)``.

    ``items`` are ``(id, p, windows)`` as accepted by :func:`eft_windows`.
    Returns ``(blocks, tags, fixed)`` after the final class-I subdivision.
    """
    whole = Interval(0, horizon)
    if horizon == 0:
        return [whole], ["II"], [()]
    by_id = {it[0]: it for it in items}

    def run(ids, region):
        acc, _ = eft_windows([by_id[x] for x in sorted(ids)], region)
        return [(jid, s, f) for jid, _, s, f, _ in acc]

    first = run(by_id, whole)
    cur = [[iv, "I" if chunk else "II", chunk] for iv, chunk in _split(whole, first, base ** 3)]
    pool = [x[0] for x in first]
    for i in range(2, n_iter + 1):
        thresh = base ** (i + 2)
        remaining = set(pool)
        kept: list[str] = []
        nxt = []
        for iv, tag, chunk in cur:
            sweep = run(remaining, iv)
            if len(sweep) > thresh:
                nxt.extend([piece, "I", c] for piece, c in _split(iv, sweep, thresh))
                done = [x[0] for x in sweep]
                remaining.difference_update(done)
                kept.extend(done)
            else:
                # sweep schedule discarded; the block keeps what it had
                nxt.append([iv, tag, chunk])
        cur = nxt
        pool = kept
        if not kept:
            break  # later sweeps see an empty pool and change nothing
    blocks, tags, fixed = [], [], []
    for iv, tag, chunk in cur:
        pieces = _split(iv, chunk, k0) if tag == "I" else [(iv, chunk)]
        for piece, c in pieces:
            blocks.append(piece)
            tags.append(tag)
            fixed.append(tuple(c))
    return blocks, tags, fixed


def n_iterations(base: int) -> int:
    return math.ceil(base * math.log(base)) + 1


def elementary_blocks(inst: Instance, eps=Fraction(1, 6), K0: int | None = None,
                      base: int | None = None) -> BlockPartition:
    """Partition ``[0, T)`` by the iterated earliest-finish greedy.

    ``base`` is the chunking constant (``6/eps`` unless overridden); the
    first pass cuts after every ``base**3`` greedy jobs and pass ``i``
    subdivides blocks whose sweep schedules more than ``base**(i+2)`` jobs.
    Class-I blocks are finally cut so their fixed schedule holds at most
    ``K0`` jobs each.
    """
    if inst.m != 1:
        raise ParameterError("elementary_blocks is single-machine; use mm_elementary_blocks")
    k = inv_eps(eps)
    base = base or 6 * k
    K0 = default_k0(eps) if K0 is None else K0
    if K0 < 1 or base < 2:
        raise ParameterError("need K0 >= 1 and base >= 2")
    T = inst.T
    items = [(j.id, j.p, ((j.r, j.d),)) for j in inst.schedulable_jobs()]
    blocks, tags, fixed = _construct(items, T, base, K0, n_iterations(base))
    return BlockPartition(tuple(blocks), T, 0, tuple(tags), tuple(fixed))


def mm_elementary_blocks(inst: Instance, eps=Fraction(1, 6), K0: int | None = None,
                         base: int | None = None, return_raw: bool = False):
    """Multi-machine elementary blocks.

    Machine ``i`` becomes the stretch ``[iT, (i+1)T)`` of one long horizon,
    where job ``j`` may run in ``[r_j + iT, d_j + iT)``. The single-machine
    construction runs there with ``eps / (2m)``; every cut point is reduced
    modulo ``T`` and the reduced points partition ``[0, T)``.
    """
    m = inst.m
    k = inv_eps(eps)
    eps_m = Fraction(1, 2 * m * k)
    base = base or 6 * 2 * m * k
    K0 = default_k0(eps_m) if K0 is None else K0
    T = inst.T
    items = [(j.id, j.p, tuple((j.r + i * T, j.d + i * T) for i in range(m)))
             for j in inst.schedulable_jobs()]
    blocks, _, _ = _construct(items, m * T, base, K0, n_iterations(base))
    pts = {b.a for b in blocks} | {b.b for b in blocks}
    part = partition_from_cuts(reduce_mod(pts, T), T)
    return (part, blocks) if return_raw else part


def reduce_mod(points, T: int) -> list[int]:
    """Points of ``[0, T]`` congruent to some input point modulo ``T``."""
    if T == 0:
        return [0]
    out = set()
    for t in points:
        r = t % T
        out.add(r)
        if r == 0:
            out.add(T)
    return sorted(out)


# ------------------------------------------------------------ block/superblock hierarchy

@dataclass(frozen=True)
class BlockSuperblockPartition:
    level: int
    blocks: tuple[Interval, ...]          # non-dummy blocks, left to right
    superblocks: tuple[Interval, ...]     # non-dummy superblocks
    block_super: tuple[int, ...]          # superblock index of each block
    n_dummy_blocks: int
    n_dummy_super: int
    K: int
    Delta: int
    merge: int                            # blocks per superblock actually used
    merge_uncapped: int
    T: int

    @property
    def heuristic(self) -> bool:
        return self.merge < self.merge_uncapped

    @property
    def n_blocks(self) -> int:
        return len(self.blocks) + self.n_dummy_blocks

    @property
    def n_super(self) -> int:
        return len(self.superblocks) + self.n_dummy_super

    def blocks_of(self, s: int) -> list[int]:
        return [b for b, x in enumerate(self.block_super) if x == s]

    def block_index(self, t: int) -> int:
        """Index of the block containing tick ``t`` (``0 <= t < T``)."""
        starts = [b.a for b in self.blocks]
        return bisect.bisect_right(starts, t) - 1

    def key(self):
        return (self.blocks, self.superblocks, self.K)

    def to_dict(self) -> dict:
        return {
            "level": self.level, "K": self.K, "Delta": self.Delta, "merge": self.merge,
            "heuristic": self.heuristic,
            "blocks": [[b.a, b.b] for b in self.blocks], "dummy_blocks": self.n_dummy_blocks,
            "superblocks": [{"interval": [s.a, s.b], "blocks": self.blocks_of(k)}
                            for k, s in enumerate(self.superblocks)],
            "dummy_superblocks": self.n_dummy_super,
        }


def _merge(blocks: Sequence[Interval], g: int) -> list[Interval]:
    return [Interval(blocks[i].a, blocks[min(i + g, len(blocks)) - 1].b)
            for i in range(0, len(blocks), g)]


def build_partitions(B0: BlockPartition, eps=Fraction(1, 6), Delta: int = 1, K0: int | None = None,
                     max_merge_factor: int = 64, max_padding: int = 10**18
                     ) -> list[BlockSuperblockPartition]:
    """All ``1/eps`` block/superblock partitions built on ``B0``.

    Level ``l`` blocks merge ``2 Delta M^(l-1)`` consecutive padded elementary
    blocks and its superblocks merge ``M`` of those, where
    ``M = min(2 K0 / eps^5, max_merge_factor)``; ``K_l = 2 Delta K0 M^(l-1)``.
    """
    k = inv_eps(eps, upper=None)
    if Delta < 1:
        raise ParameterError("Delta must be >= 1")
    K0 = default_k0(eps) if K0 is None else K0
    merge_true = 2 * K0 * k ** 5
    M = min(merge_true, max_merge_factor)
    if M < 1:
        raise ParameterError("merge factor must be >= 1")
    pad = 2 * Delta * M ** k
    if pad > max_padding:
        raise ParameterError(f"padding multiple {pad} exceeds max_padding={max_padding}; "
                             f"lower K0, Delta or max_merge_factor")
    real = list(B0.blocks)
    total = -(-len(real) // pad) * pad
    out = []
    for lvl in range(1, k + 1):
        g = 2 * Delta * M ** (lvl - 1)
        gs = g * M
        blocks = _merge(real, g)
        supers = _merge(real, gs)
        block_super = tuple(i * g // gs for i in range(len(blocks)))
        out.append(BlockSuperblockPartition(
            level=lvl, blocks=tuple(blocks), superblocks=tuple(supers), block_super=block_super,
            n_dummy_blocks=total // g - len(blocks), n_dummy_super=total // gs - len(supers),
            K=2 * Delta * K0 * M ** (lvl - 1), Delta=Delta, merge=M, merge_uncapped=merge_true,
            T=B0.T))
    return out


def manual_partition(block_cuts: Sequence[int], super_cuts: Sequence[int], T: int, K: int,
                     level: int = 1, Delta: int = 1) -> BlockSuperblockPartition:
    """Hierarchy from explicit cut points; every superblock cut must be a block cut."""
    blocks = partition_from_cuts(block_cuts, T).blocks
    supers = partition_from_cuts(super_cuts, T).blocks
    starts = [s.a for s in supers]
    if not {s.a for s in supers} <= {b.a for b in blocks}:
        raise ParameterError("superblock cuts must be block cuts")
    block_super = tuple(bisect.bisect_right(starts, b.a) - 1 for b in blocks)
    return BlockSuperblockPartition(level, blocks, supers, block_super, 0, 0, K, Delta,
                                    len(blocks), len(blocks), T)


def dumps_partitions(parts: Sequence[BlockSuperblockPartition]) -> str:
    return json.dumps([p.to_dict() for p in parts], sort_keys=True, indent=1) + "\n"


# ------------------------------------------------------------ job geometry

@dataclass(frozen=True)
class JobGeometry:
    release_block: int
    deadline_block: int
    local: bool
    spanned: tuple[int, ...]  # superblock indices with S inside the window

    def admissible(self, block: int, part: BlockSuperblockPartition) -> bool:
        """May the job appear in a configuration of ``block``?"""
        if block == self.release_block or block == self.deadline_block:
            return True
        return part.block_super[block] in self.spanned

    def admissible_blocks(self, part: BlockSuperblockPartition) -> list[int]:
        out = {self.release_block, self.deadline_block}
        for s in self.spanned:
            out.update(part.blocks_of(s))
        return sorted(out)


def job_geometry(inst: Instance, part: BlockSuperblockPartition) -> dict[str, JobGeometry | None]:
    """Boundary blocks, locality and spanned superblocks of every job.

    Unschedulable jobs map to ``None``.
    """
    starts = [b.a for b in part.blocks]
    ends = [b.b for b in part.blocks]
    out: dict[str, JobGeometry | None] = {}
    for j in inst.jobs:
        if not j.schedulable or not part.blocks:
            out[j.id] = None
            continue
        bl = bisect.bisect_right(starts, j.r) - 1       # r in [a, b)
        br = bisect.bisect_left(ends, j.d)              # d in (a, b]
        spanned = tuple(k for k, s in enumerate(part.superblocks)
                        if not s.empty and j.r <= s.a and s.b <= j.d)
        out[j.id] = JobGeometry(bl, br, bl == br, spanned)
    return out


def fits_block(job: Job, block: Interval) -> bool:
    return len(job.window.intersect(block)) >= job.p
