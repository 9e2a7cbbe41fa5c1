# %% [markdown]
# # Greedy, exact and the checker
#
# A small random instance, the earliest-finish greedy, and the exact
# optimum from two independent solvers. Every schedule goes through
# `check_feasible` before we trust it.

# %%
from tput.core import Interval, check_feasible, dumps_schedule, gen_random
from tput.conflp import exact_small_opt
from tput.greedy import eft_greedy
from tput.oracle import exact_opt

inst = gen_random(n=12, T=40, m=1, seed=3)
for j in inst.jobs:
    print(f"{j.id}: p={j.p:2d} window=[{j.r:2d},{j.d:2d})")

# %% [markdown]
# The greedy repeatedly takes the job that can finish first. Its trace keeps
# the acceptance order; finishing times never go down along it.

# %%
greedy, trace = eft_greedy(inst.jobs, Interval(0, inst.T), inst.m)
print("greedy throughput:", greedy.throughput)
print("accepted:", trace.accepted)
print("rejected:", trace.rejected)

# %% [markdown]
# Two exact answers. `exact_opt` is a subset dynamic program meant as a test
# oracle; `exact_small_opt` uses color coding and iterative deepening from
# the greedy value. They should agree.

# %%
opt = exact_opt(inst)
res = exact_small_opt(inst, seed=0)
print("oracle OPT:", opt.throughput, " color-coding OPT:", res.schedule.throughput, " proved:", res.exact)
assert check_feasible(inst, opt) and check_feasible(inst, res.schedule)

# %% [markdown]
# Breaking a schedule on purpose shows what the checker reports.

# %%
rows = [(jid, pl.machine, pl.start) for jid, pl in opt]
jid, mach, _ = rows[0]
rows[0] = (jid, mach, inst.T)   # push the first job past the horizon
rep = check_feasible(inst, rows)
print("feasible:", rep.feasible)
for v in rep.violations:
    print(" ", v.kind, v.job, v.detail)

print(dumps_schedule(opt))
