"""Throughput maximization: greedy, configuration LP with two roundings, exact small solver."""

from .blocks import (BlockPartition, BlockSuperblockPartition, JobGeometry, build_partitions,
                     elementary_blocks, job_geometry, mm_elementary_blocks)
from .conflp import (Configuration, LPSolution, enumerate_configs, exact_small_opt, marginals,
                     price_config, solve_lp)
from .core import (Instance, Interval, Job, Placement, Schedule, check_feasible, gen_random,
                   load_instance, load_schedule, normalize, save_instance, save_schedule)
from .greedy import block_greedy_schedule, eft_greedy
from .oracle import OracleLimits, exact_opt, max_matching_bf, max_weight_config_bf
from .pipeline import RunReport, SolveConfig, bench, solve

__all__ = [
    "BlockPartition", "BlockSuperblockPartition", "JobGeometry", "build_partitions",
    "elementary_blocks", "job_geometry", "mm_elementary_blocks",
    "Configuration", "LPSolution", "enumerate_configs", "exact_small_opt", "marginals",
    "price_config", "solve_lp",
    "Instance", "Interval", "Job", "Placement", "Schedule", "check_feasible", "gen_random",
    "load_instance", "load_schedule", "normalize", "save_instance", "save_schedule",
    "block_greedy_schedule", "eft_greedy",
    "OracleLimits", "exact_opt", "max_matching_bf", "max_weight_config_bf",
    "RunReport", "SolveConfig", "bench", "solve",
]
