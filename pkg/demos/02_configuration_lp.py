# %% [markdown]
# # Blocks and the configuration LP
#
# The horizon is cut into blocks; a configuration is a small set of jobs
# with a fixed schedule inside one block. The LP chooses a mix of
# configurations per block while using every job at most once.

# %%
from fractions import Fraction

from tput.blocks import build_partitions, elementary_blocks, job_geometry, manual_partition
from tput.conflp import marginals, solve_lp
from tput.core import gen_random, normalize
from tput.oracle import exact_opt

eps = Fraction(1, 6)
inst = normalize(gen_random(n=14, T=48, m=1, seed=11))

# %% [markdown]
# With the real constants the greedy-driven construction never cuts an
# instance this small: every partition level is the single block `[0, T)`.

# %%
B0 = elementary_blocks(inst, eps)
parts = build_partitions(B0, eps, Delta=1, K0=2, max_merge_factor=4)
print("elementary blocks:", B0.blocks)
print("levels:", [(p.level, len(p.blocks), p.K) for p in parts])

# %% [markdown]
# To see the LP do something, cut by hand: four blocks, two superblocks,
# at most three jobs per configuration.

# %%
T = inst.T
part = manual_partition([0, 12, 24, 36, T], [0, 24, T], T, K=3)
geo = job_geometry(inst, part)
for jid, g in sorted(geo.items()):
    if g is not None:
        kind = "local" if g.local else "global"
        print(f"{jid}: blocks {g.release_block}->{g.deadline_block} {kind}, spans {g.spanned}")

# %% [markdown]
# Column generation starts from empty configurations and prices new ones
# with color coding. Explicit enumeration must reach the same value. The LP
# may sit below OPT here: jobs are confined to their admissible blocks and
# configurations hold at most three jobs.

# %%
cg = solve_lp(inst, part, "colgen", seed=1)
en = solve_lp(inst, part, "enumerate")
print(f"colgen {cg.objective:.4f} after {cg.iterations} rounds, {len(cg.configs)} columns")
print(f"enumerate {en.objective:.4f} over {len(en.configs)} columns")
print("exact OPT:", exact_opt(inst).throughput)

# %% [markdown]
# The duals certify optimality: no enumerated column has positive reduced
# cost, and the dual objective equals the primal one.

# %%
print("max reduced cost:", max(cg.reduced_cost(c) for c in en.configs))
print("dual objective:", sum(cg.duals.alpha.values()) + sum(cg.duals.beta))

# %% [markdown]
# Marginals split each job's LP mass into its release block, deadline block
# and the superblocks it spans.

# %%
marg = marginals(cg)
print("decomposition gap:", marg.decomposition_gap())
for jid in sorted(marg.y):
    if marg.y[jid] > 0:
        print(f"{jid}: y={marg.y[jid]:.2f} L={marg.y_left[jid]:.2f} R={marg.y_right[jid]:.2f} "
              f"S={ {k: round(v, 2) for k, v in marg.y_super[jid].items()} }")
