"""Orchestration: partitions, LP, roundings, exact fallback, best-of-all, and benchmarks."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from . import round_assign, round_match
from .blocks import (ParameterError, build_partitions, default_k0, elementary_blocks, inv_eps,
                     mm_elementary_blocks)
from .conflp import exact_small_opt, marginals, solve_lp
from .core import Instance, Interval, Placement, Schedule, check_feasible, gen_random, normalize
from .greedy import eft_greedy
from .oracle import OracleLimitError, OracleLimits, exact_opt

log = logging.getLogger(__name__)

MODES = ("poly43", "pseudo54", "greedy", "exact", "auto")


def parse_eps(value) -> Fraction:
    if isinstance(value, Fraction):
        f = value
    elif isinstance(value, str):
        f = Fraction(value.strip())
    else:
        f = Fraction(value).limit_denominator(10**6)
    inv_eps(f)
    return f


def env_seed(default: int = 0) -> int:
    raw = os.environ.get("TPUT_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"TPUT_SEED must be an integer, got {raw!r}") from None


@dataclass
class SolveConfig:
    eps: Fraction = Fraction(1, 6)
    mode: str = "auto"
    seed: int | None = None          # None: TPUT_SEED, else 0
    trials: int = 8
    k0: int | None = None            # None: capped default from the block construction
    k0_cap: int = 64
    max_merge_factor: int = 64
    max_padding: int = 10**18
    max_config_size: int = 4         # K actually used in configurations
    delta: int | None = None         # None: 1 for poly43, 4(log2 T + 1)/eps^4 for pseudo54
    lp_mode: str = "colgen"
    tol_lp: float = 1e-9
    fail_prob: float = 1e-6
    exhaustive_max: int = 8
    max_cg_iters: int = 200
    exact_first: bool = True
    exact_k_max: int = 20
    exact_max_work: float = 5e8
    pseudo_T_max: int = 5000
    oracle: bool = False             # also compute the exact optimum when within limits
    oracle_max_jobs: int = 15
    oracle_max_horizon: int = 64
    oracle_max_machines: int = 2

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        self.eps = parse_eps(self.eps)
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lp_mode not in ("colgen", "enumerate"):
            raise ParameterError(f"lp_mode must be colgen or enumerate, got {self.lp_mode!r}")
        for name in ("trials", "k0_cap", "max_merge_factor", "max_config_size", "max_cg_iters",
                     "exact_k_max", "pseudo_T_max"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.k0 is not None and self.k0 < 1:
            raise ParameterError("k0 must be >= 1")
        if self.delta is not None and self.delta < 1:
            raise ParameterError("delta must be >= 1")
        if not 0 < self.fail_prob < 1:
            raise ParameterError("fail_prob must lie in (0, 1)")
        if self.tol_lp <= 0:
            raise ParameterError("tol_lp must be positive")

    @property
    def resolved_seed(self) -> int:
        return env_seed() if self.seed is None else int(self.seed)

    @property
    def oracle_limits(self) -> OracleLimits:
        return OracleLimits(self.oracle_max_jobs, self.oracle_max_horizon, self.oracle_max_machines)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["eps"] = f"{self.eps.numerator}/{self.eps.denominator}"
        return d

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SolveConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(doc) - names
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**dict(doc))

    @classmethod
    def load(cls, path: str) -> "SolveConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class LevelResult:
    level: int
    blocks: int
    K: int
    K_used: int
    lp_objective: float
    lp_optimal: bool
    match: int
    assign: int | None
    y_local: float
    y_global: float

    @property
    def case(self) -> str:
        # split used in the best-of-two argument: local mass at least a fifth of the LP value
        return "local" if self.y_local >= (self.y_local + self.y_global) / 5 else "global"


@dataclass
class RunReport:
    mode: str
    eps: str
    seed: int
    n: int
    m: int
    T: int
    throughput: dict[str, int] = field(default_factory=dict)
    chosen: str = "greedy"
    chosen_level: int | None = None
    levels: list[LevelResult] = field(default_factory=list)
    lp_objective: float | None = None
    ratio_vs_lp: float | None = None
    opt: int | None = None
    ratio_vs_opt: float | None = None
    exact: dict | None = None
    delta: int | None = None
    heuristic: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict, compare=False)

    def to_dict(self, timings: bool = True) -> dict:
        d = dataclasses.asdict(self)
        for lv, src in zip(d["levels"], self.levels):
            lv["case"] = src.case
        if not timings:
            d.pop("timings")
        return d


def _ratio(num, den):
    if num is None or den is None:
        return None
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def pseudo_delta(T: int, eps: Fraction) -> int:
    k = inv_eps(eps, upper=None)
    return math.ceil(4 * (math.log2(max(T, 1)) + 1) * k ** 4)


def _shift(sched: Schedule, offset: int) -> Schedule:
    if not offset:
        return sched
    return Schedule({j: Placement(pl.machine, pl.start + offset) for j, pl in sched})


def _lp_path(inst: Instance, cfg: SolveConfig, delta: int, both: bool, seed: int,
             rep: RunReport, cands: dict[str, Schedule]) -> None:
    eps = cfg.eps
    k0 = cfg.k0 if cfg.k0 is not None else default_k0(eps, cfg.k0_cap)
    B0 = elementary_blocks(inst, eps, k0) if inst.m == 1 else mm_elementary_blocks(inst, eps, k0)
    parts = build_partitions(B0, eps, delta, k0, cfg.max_merge_factor, cfg.max_padding)
    if parts and parts[0].heuristic:
        rep.heuristic.append(f"merge factor capped at {parts[0].merge} (uncapped {parts[0].merge_uncapped})")
    seen = set()
    for part in parts:
        K_used = min(part.K, cfg.max_config_size)
        key = (part.blocks, part.superblocks, K_used)
        if key in seen:
            continue
        seen.add(key)
        if K_used < part.K and not any(h.startswith("configuration size") for h in rep.heuristic):
            rep.heuristic.append(f"configuration size capped at {K_used} (level {part.level} allows {part.K})")
        sol = solve_lp(inst, part, cfg.lp_mode, K_used, cfg.tol_lp, cfg.fail_prob, seed,
                       cfg.exhaustive_max, cfg.max_cg_iters)
        if not sol.optimal:
            rep.warnings.append(f"level {part.level}: LP not proven optimal")
        marg = marginals(sol)
        y_loc = float(sum(v for j, v in marg.y.items() if marg.local.get(j)))
        y_glob = float(sum(v for j, v in marg.y.items() if not marg.local.get(j)))
        sm = round_match.run(inst, part, sol, cfg.trials, seed)
        cands[f"match@{part.level}"] = sm
        sa = None
        if both:
            sa = round_assign.run(inst, part, sol, eps, cfg.trials, seed)
            cands[f"assign@{part.level}"] = sa
        rep.levels.append(LevelResult(part.level, len(part.blocks), part.K, K_used, sol.objective,
                                      sol.optimal, sm.throughput,
                                      None if sa is None else sa.throughput, y_loc, y_glob))


def solve(inst: Instance, cfg: SolveConfig | None = None) -> tuple[Schedule, RunReport]:
    """Run the configured algorithm and return the best schedule found with a report.

    The greedy schedule is always a candidate, so the result never falls
    below it. Randomness derives from the single seed in ``cfg``.
    """
    cfg = cfg or SolveConfig()
    cfg.validate()
    seed = cfg.resolved_seed
    offset = min((j.r for j in inst.jobs), default=0)
    work = normalize(inst) if inst.jobs else inst
    T = work.T
    mode = cfg.mode
    if mode == "auto":
        mode = "pseudo54" if T <= cfg.pseudo_T_max else "poly43"
    rep = RunReport(mode, f"1/{inv_eps(cfg.eps)}", seed, inst.n, inst.m, T)
    cands: dict[str, Schedule] = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        rep.timings[name] = round(now - clock, 6)
        clock = now

    cands["greedy"], _ = eft_greedy(work.jobs, Interval(0, T), work.m)
    lap("greedy")
    try:
        if mode == "exact":
            res = exact_small_opt(work, min(cfg.exact_k_max, 20), cfg.fail_prob, seed,
                                  cfg.exhaustive_max, max_work=cfg.exact_max_work)
            cands["exact"] = res.schedule
            rep.exact = {"exact": res.exact, "k": res.k_reached}
            if not res.exact:
                try:
                    cands["oracle"] = exact_opt(work, cfg.oracle_limits)
                except OracleLimitError:
                    rep.warnings.append("exact search hit its cap; result is a lower bound")
            lap("exact")
        elif mode in ("poly43", "pseudo54"):
            done = False
            if mode == "pseudo54" and cfg.exact_first:
                res = exact_small_opt(work, min(cfg.exact_k_max, 20), cfg.fail_prob, seed,
                                      cfg.exhaustive_max, max_work=cfg.exact_max_work)
                n_sched = len(work.schedulable_jobs())
                done = res.exact or res.schedule.throughput == n_sched
                rep.exact = {"exact": res.exact, "k": res.k_reached, "accepted": done}
                cands["exact"] = res.schedule
                lap("exact")
            if not done and work.schedulable_jobs():
                delta = cfg.delta or (1 if mode == "poly43" else pseudo_delta(T, cfg.eps))
                rep.delta = delta
                _lp_path(work, cfg, delta, mode == "pseudo54", seed, rep, cands)
                lap("lp+rounding")
    except (ParameterError, RuntimeError) as exc:
        rep.warnings.append(f"{mode} stage failed: {exc}; falling back to the best schedule so far")
        log.warning("%s stage failed: %s", mode, exc)

    order = list(cands)
    best_name = max(order, key=lambda k: (cands[k].throughput, -order.index(k)))
    best = cands[best_name]
    rep.throughput = {k: v.throughput for k, v in cands.items()}
    rep.chosen = best_name
    if "@" in best_name:
        rep.chosen_level = int(best_name.split("@")[1])
    if rep.levels:
        top = max(rep.levels, key=lambda lv: lv.lp_objective)
        rep.lp_objective = top.lp_objective
        rep.ratio_vs_lp = _ratio(top.lp_objective, best.throughput)
    if cfg.oracle:
        try:
            rep.opt = exact_opt(work, cfg.oracle_limits).throughput
            rep.ratio_vs_opt = _ratio(rep.opt, best.throughput)
        except OracleLimitError as exc:
            rep.warnings.append(f"oracle skipped: {exc}")
        lap("oracle")
    feas = check_feasible(work, best)
    if not feas:
        raise AssertionError(f"final schedule infeasible: {feas.violations[:3]}")
    return _shift(best, offset), rep


# ------------------------------------------------------------ benchmark

BENCH_COLUMNS = ["n", "T", "m", "seed", "mode", "opt", "lp_objective", "greedy", "match",
                 "assign", "exact", "alg", "opt_over_alg", "lp_over_alg", "chosen"]


def _family(spec: Mapping[str, Any]):
    seeds = spec.get("seeds")
    if seeds is None:
        seeds = range(int(spec.get("seed0", 0)), int(spec.get("seed0", 0)) + int(spec.get("count", 0)))
    for n in spec.get("n", []):
        for T in spec.get("T", []):
            for m in spec.get("m", [1]):
                for s in seeds:
                    yield int(n), int(T), int(m), int(s)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.6f}"
    return str(x)


def bench(spec: Mapping[str, Any], cfg: SolveConfig | None = None, timings: bool = False) -> str:
    """CSV with one row per generated instance; deterministic unless ``timings`` is set.

    ``spec`` keys: ``n``, ``T``, ``m`` (lists), ``seeds`` or ``seed0`` and
    ``count``, optional ``p_dist`` and ``slack_dist``.
    """
    cfg = cfg or SolveConfig()
    p_dist = tuple(spec.get("p_dist", ("uniform", 1, 8)))
    slack = tuple(spec.get("slack_dist", ("uniform", 0, 10)))
    cols = BENCH_COLUMNS + (["seconds"] if timings else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for n, T, m, s in _family(spec):
        inst = gen_random(n, T, m, p_dist, slack, seed=s)
        run_cfg = dataclasses.replace(cfg, seed=s, oracle=True)
        t0 = time.perf_counter()
        sched, rep = solve(inst, run_cfg)
        secs = time.perf_counter() - t0
        tp = rep.throughput
        best_of = lambda prefix: max((v for k, v in tp.items() if k.startswith(prefix)), default=None)
        row = [n, T, m, s, rep.mode, rep.opt, rep.lp_objective, tp.get("greedy"), best_of("match@"),
               best_of("assign@"), tp.get("exact"), sched.throughput,
               _ratio(rep.opt, sched.throughput), rep.ratio_vs_lp, rep.chosen]
        if timings:
            row.append(secs)
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()
