import pytest

from tput.core import Instance, Interval, Job, check_feasible, gen_random
from tput.greedy import CapacityError, block_greedy_schedule, eft_greedy
from tput.oracle import exact_opt


def test_shorter_finishing_job_first():
    jobs = [Job("long", 5, 0, 10), Job("short", 2, 0, 10)]
    sched, trace = eft_greedy(jobs, Interval(0, 10))
    assert sched.entries["short"].start == 0 and sched.entries["long"].start == 2
    assert trace.accepted == [("short", 0, 2), ("long", 2, 7)]


def test_conflicting_pair():
    sched, trace = eft_greedy([Job("a", 3, 0, 3), Job("b", 3, 0, 3)], Interval(0, 3))
    assert sched.throughput == 1 and list(trace.rejected) == ["b"]


def test_rejection_reasons():
    jobs = [Job("x", 3, 4, 6), Job("y", 2, 20, 30)]
    _, trace = eft_greedy(jobs, Interval(0, 10))
    assert trace.rejected == {"x": "window shorter than p", "y": "window does not fit region"}


def test_multi_machine_prefers_low_index():
    sched, _ = eft_greedy([Job("a", 3, 0, 3), Job("b", 3, 0, 3)], Interval(0, 3), m=2)
    assert sched.entries["a"].machine == 0 and sched.entries["b"].machine == 1


def test_two_approximation_small():
    for s in range(30):
        inst = gen_random(9, 30, m=1 + s % 2, seed=s)
        sched, trace = eft_greedy(inst.jobs, Interval(0, inst.T), inst.m)
        assert check_feasible(inst, sched)
        assert trace.finishes == sorted(trace.finishes)
        assert 2 * sched.throughput >= exact_opt(inst).throughput


def test_block_greedy_example():
    s, t = 10, 16
    left = [Job("L", 2, 0, s + 3)]
    right = [Job("R", 2, t - 3, 40)]
    mid = [Job("M", 1, 0, 40)]
    sched = block_greedy_schedule(left, right, mid, Interval(s, t))
    assert {k: v.start for k, v in sched} == {"L": s, "M": s + 2, "R": t - 2}
    assert check_feasible(Instance(tuple(left + right + mid)), sched)


def test_block_greedy_empty_and_tight():
    assert block_greedy_schedule([], [], [], Interval(0, 5)).throughput == 0
    mid = [Job("a", 2, 0, 9), Job("b", 3, 0, 9)]
    sched = block_greedy_schedule([], [], mid, Interval(2, 7))
    assert sorted((v.start, k) for k, v in sched) == [(2, "a"), (4, "b")]


def test_block_greedy_capacity_errors():
    with pytest.raises(CapacityError):
        block_greedy_schedule([], [], [Job("a", 4, 0, 9), Job("b", 4, 0, 9)], Interval(0, 6))
    with pytest.raises(CapacityError):
        # two right jobs released late: the earlier-released one gets pushed before its release
        block_greedy_schedule([], [Job("a", 2, 4, 20), Job("b", 2, 4, 20)], [], Interval(0, 7))
