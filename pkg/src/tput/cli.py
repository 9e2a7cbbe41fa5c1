"""Command line entry point: ``tput solve|gen|verify|lp|bench``.

Exit codes: 0 success, 1 usage or input error, 2 infeasible schedule on
``verify``, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .blocks import ParameterError, build_partitions, default_k0, elementary_blocks, mm_elementary_blocks
from .conflp import dumps_lp, solve_lp
from .core import (InstanceError, check_feasible, dumps_instance, dumps_schedule, gen_random,
                   load_instance, load_schedule, normalize)
from .pipeline import MODES, SolveConfig, bench, env_seed, parse_eps, pseudo_delta, solve

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read_instance(path: str):
    if path == "-":
        return load_instance(sys.stdin.read())
    with open(path, "rb") as fh:
        return load_instance(fh)


def _config(args) -> SolveConfig:
    cfg = SolveConfig.load(args.config) if getattr(args, "config", None) else SolveConfig()
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "eps", None):
        cfg.eps = parse_eps(args.eps)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "trials", None):
        cfg.trials = args.trials
    cfg.validate()
    return cfg


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    cfg = _config(args)
    cfg.oracle = args.oracle
    sched, rep = solve(inst, cfg)
    _write(dumps_schedule(sched), args.out)
    if args.report:
        _write(json.dumps(rep.to_dict(), sort_keys=True, indent=1, default=str) + "\n", args.report)
    print(f"throughput {sched.throughput} via {rep.chosen} (mode {rep.mode})", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = env_seed() if args.seed is None else args.seed
    inst = gen_random(args.n, args.T, args.m, ("uniform", 1, args.pmax), ("uniform", 0, args.slack), seed)
    _write(dumps_instance(inst), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _read_instance(args.instance)
    with open(args.schedule, "rb") as fh:
        sched = load_schedule(fh)
    rep = check_feasible(inst, sched)
    out = {"feasible": rep.feasible, "throughput": sched.throughput,
           "violations": [{"kind": v.kind, "job": v.job, "detail": v.detail, "other": v.other}
                          for v in rep.violations]}
    sys.stdout.write(json.dumps(out, sort_keys=True, indent=1) + "\n")
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_lp(args) -> int:
    inst = normalize(_read_instance(args.instance))
    cfg = _config(args)
    eps = cfg.eps
    k0 = args.k0 or default_k0(eps, cfg.k0_cap)
    delta = args.delta or (1 if cfg.mode != "pseudo54" else pseudo_delta(inst.T, eps))
    B0 = elementary_blocks(inst, eps, k0) if inst.m == 1 else mm_elementary_blocks(inst, eps, k0)
    parts = build_partitions(B0, eps, delta, k0, cfg.max_merge_factor, cfg.max_padding)
    if not 1 <= args.level <= len(parts):
        raise UsageError(f"--level must lie in 1..{len(parts)}")
    part = parts[args.level - 1]
    K = min(part.K, args.K or cfg.max_config_size)
    sol = solve_lp(inst, part, args.lp_mode, K, cfg.tol_lp, cfg.fail_prob, cfg.resolved_seed,
                   cfg.exhaustive_max, cfg.max_cg_iters)
    _write(dumps_lp(sol), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    with open(args.spec) as fh:
        spec = json.load(fh)
    cfg = _config(args)
    _write(bench(spec, cfg, timings=args.timings), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tput", description="Throughput maximization on identical machines.")
    p.add_argument("--json", action="store_true", help="machine-readable errors on stderr")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--eps", help="1/k, e.g. 1/6")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--config", help="JSON file with SolveConfig fields")
    s.add_argument("--oracle", action="store_true", help="also compute OPT when small enough")
    s.add_argument("--out", help="schedule output (default stdout)")
    s.add_argument("--report", help="write the run report JSON here")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--T", type=int, default=40)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--seed", type=int)
    g.add_argument("--pmax", type=int, default=8)
    g.add_argument("--slack", type=int, default=10)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="check a schedule against an instance")
    v.add_argument("instance")
    v.add_argument("schedule")
    v.set_defaults(func=cmd_verify)

    lp = sub.add_parser("lp", help="solve and dump the configuration LP of one partition level")
    lp.add_argument("instance")
    lp.add_argument("--level", type=int, default=1)
    lp.add_argument("--delta", type=int)
    lp.add_argument("--k0", type=int)
    lp.add_argument("--K", type=int)
    lp.add_argument("--lp-mode", choices=("colgen", "enumerate"), default="colgen")
    lp.add_argument("--eps")
    lp.add_argument("--seed", type=int)
    lp.add_argument("--config")
    lp.add_argument("--out")
    lp.set_defaults(func=cmd_lp)

    b = sub.add_parser("bench", help="run a benchmark family and print CSV")
    b.add_argument("spec")
    b.add_argument("--config")
    b.add_argument("--timings", action="store_true", help="add a wall-time column")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def _fail(code: int, kind: str, msg: str, as_json: bool) -> int:
    if as_json:
        sys.stderr.write(json.dumps({"error": kind, "message": msg, "exit": code}) + "\n")
    else:
        sys.stderr.write(f"tput: {kind}: {msg}\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json" in argv
    argv = [a for a in argv if a != "--json"]
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("missing subcommand")
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc), as_json)
    except (InstanceError, ParameterError, ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, str(exc), as_json)
    except Exception as exc:  # noqa: BLE001 - top-level guard
        return _fail(EXIT_INTERNAL, type(exc).__name__, str(exc), as_json)


if __name__ == "__main__":
    raise SystemExit(main())
