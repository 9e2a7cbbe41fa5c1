"""Color-coding dynamic programs shared by pricing and the small exact solver.

Both DPs run many random colorings at once: the trial axis is the leading
numpy axis and subsets of colors are processed layer by layer (by size), so
the Python loop count is ``(#colors) x (#jobs)`` per chunk of trials.

Several machines are handled by laying their copies of the region end to
end on one line: a job may use the copy of its window on any machine, and a
schedule on the line is exactly an ``m``-machine schedule.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

BIG = np.iinfo(np.int64).max // 4


def perfect_prob(k: int) -> float:
    """Probability that a uniform ``k``-coloring makes ``k`` fixed items distinct."""
    return math.factorial(k) / k ** k if k > 0 else 1.0


def coloring_trials(k: int, fail_prob: float) -> int:
    """Independent colorings needed so a fixed ``k``-set is colorful w.p. ``>= 1 - fail_prob``."""
    p = perfect_prob(k)
    if p >= 1.0:
        return 1
    return max(1, math.ceil(math.log(fail_prob) / math.log1p(-p)))


def layers(k: int, cap: int) -> list[np.ndarray]:
    """Masks over ``k`` bits grouped by popcount ``1..cap``."""
    out = []
    for size in range(1, min(k, cap) + 1):
        out.append(np.array([sum(1 << b for b in c) for c in combinations(range(k), size)],
                            dtype=np.int64))
    return out


def _chunk(n_trials: int, per_trial: int, budget: int = 1 << 22) -> int:
    return max(1, min(n_trials, budget // max(per_trial, 1)))


# ------------------------------------------------------------ weighted (A, q) DP

def latest_starts(windows, p: int, lo: int, n_q: int) -> np.ndarray:
    """For each end point ``q = lo + idx``, the latest start of the job ending by ``q``.

    ``windows`` are the usable ``[r, d)`` pieces on the line. Entry is ``-1``
    when the job cannot finish by ``q`` in any piece. Values are indices
    relative to ``lo``.
    """
    q = np.arange(n_q, dtype=np.int64) + lo
    best = np.full(n_q, -1, dtype=np.int64)
    for r, d in windows:
        cand = np.minimum(q, d) - p
        ok = cand >= r
        best = np.where(ok & (cand - lo > best), cand - lo, best)
    return best


def weight_dp(colors: np.ndarray, k: int, qp: np.ndarray, w: np.ndarray, cap: int) -> np.ndarray:
    """``dp[t, A, q]``: best weight of a colorful set using colors ``A`` ending by ``q``.

    ``colors`` is ``(trials, n)``; ``qp`` is ``(n, Q)`` from :func:`latest_starts`.
    """
    tr, n = colors.shape
    Q = qp.shape[1]
    dp = np.zeros((tr, 1 << k, Q))
    rows = np.arange(tr)[:, None, None]
    for masks in layers(k, cap):
        best = np.zeros((tr, len(masks), Q))
        for j in range(n):
            valid = np.flatnonzero(qp[j] >= 0)
            if not len(valid):
                continue
            c = colors[:, j:j + 1]                       # (tr, 1)
            has = (masks[None, :] >> c) & 1               # (tr, nA)
            sub = masks[None, :] ^ (np.int64(1) << c)     # (tr, nA)
            prev = dp[rows, sub[:, :, None], qp[j, valid][None, None, :]]
            cand = np.where(has[:, :, None] == 1, prev + w[j], 0.0)
            best[:, :, valid] = np.maximum(best[:, :, valid], cand)
        dp[:, masks, :] = best
    return dp


def best_weight(colors, k, qp, w, cap, chunk_budget: int = 1 << 22, stop_above: float | None = None):
    """Best final value over all trials; returns ``(value, trial index)``.

    With ``stop_above`` the scan ends after the first chunk of trials whose
    best value exceeds it.
    """
    tr = colors.shape[0]
    step = _chunk(tr, (1 << k) * qp.shape[1], chunk_budget)
    if stop_above is not None:
        step = min(step, 16)
    best, arg = 0.0, -1
    for a in range(0, tr, step):
        if stop_above is not None and best > stop_above:
            break
        dp = weight_dp(colors[a:a + step], k, qp, w, cap)
        final = dp[:, :, -1].max(axis=1)
        t = int(np.argmax(final))
        if final[t] > best:
            best, arg = float(final[t]), a + t
    return best, arg


def trace_weight(colors_row: np.ndarray, k: int, qp: np.ndarray, w: np.ndarray, cap: int):
    """Recover ``[(job index, start index)]`` for one coloring's optimum."""
    dp = weight_dp(colors_row[None, :], k, qp, w, cap)[0]
    A = int(np.argmax(dp[:, -1]))
    q = qp.shape[1] - 1
    out = []
    while A and dp[A, q] > 0:
        v = dp[A, q]
        for j in range(len(w)):
            c = int(colors_row[j])
            if not A >> c & 1 or qp[j, q] < 0:
                continue
            qs = int(qp[j, q])
            if dp[A ^ (1 << c), qs] + w[j] == v:
                out.append((j, qs))
                A ^= 1 << c
                q = qs
                break
        else:
            raise AssertionError("weight DP traceback failed")
    return out[::-1]


# ------------------------------------------------------------ earliest-finish DP

def finish_dp(colors: np.ndarray, k: int, p: np.ndarray, windows: np.ndarray, cap: int,
              start: int) -> np.ndarray:
    """``g[t, A]``: earliest finish of a colorful sequence using exactly colors ``A``.

    ``windows`` is ``(n, W, 2)`` with each job's usable pieces on the line.
    """
    tr, n = colors.shape
    g = np.full((tr, 1 << k), BIG, dtype=np.int64)
    g[:, 0] = start
    for masks in layers(k, cap):
        best = np.full((tr, len(masks)), BIG, dtype=np.int64)
        for j in range(n):
            c = colors[:, j:j + 1]
            has = (masks[None, :] >> c) & 1
            sub = masks[None, :] ^ (np.int64(1) << c)
            prev = np.take_along_axis(g, sub, axis=1)
            for r, d in windows[j]:
                f = np.maximum(prev, r) + p[j]
                ok = (has == 1) & (prev < BIG) & (f <= d)
                best = np.where(ok & (f < best), f, best)
        g[:, masks] = best
    return g


def trace_finish(colors_row, k, p, windows, cap, start, A):
    """Job order and start times of the sequence realizing ``g[A]``."""
    g = finish_dp(colors_row[None, :], k, p, windows, cap, start)[0]
    out = []
    while A:
        target = g[A]
        for j in range(len(p)):
            c = int(colors_row[j])
            if not A >> c & 1:
                continue
            prev = g[A ^ (1 << c)]
            if prev >= BIG:
                continue
            hit = None
            for r, d in windows[j]:
                f = max(prev, r) + p[j]
                if f <= d and (hit is None or f < hit):
                    hit = f
            if hit == target:
                out.append((j, int(hit - p[j])))
                A ^= 1 << c
                break
        else:
            raise AssertionError("finish DP traceback failed")
    return out[::-1]
