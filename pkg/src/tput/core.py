"""Instance and schedule data model.

Time is measured in integer ticks. Windows and execution intervals are
half-open, ``[a, b)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping

import numpy as np


class InstanceError(ValueError):
    """Malformed or invalid instance/schedule document."""


@dataclass(frozen=True, order=True)
class Interval:
    a: int
    b: int

    def __post_init__(self):
        if self.a > self.b:
            raise ValueError(f"interval [{self.a},{self.b}) has a > b")

    def __len__(self) -> int:
        return self.b - self.a

    @property
    def empty(self) -> bool:
        return self.a == self.b

    def contains(self, other: "Interval") -> bool:
        if other.empty:
            return True
        return self.a <= other.a and other.b <= self.b

    def intersect(self, other: "Interval") -> "Interval":
        a, b = max(self.a, other.a), min(self.b, other.b)
        return Interval(a, max(a, b))

    def __repr__(self):
        return f"[{self.a},{self.b})"


@dataclass(frozen=True)
class Job:
    id: str
    p: int
    r: int
    d: int

    def __post_init__(self):
        if self.p < 1:
            raise InstanceError(f"job {self.id!r}: processing time {self.p} < 1")
        if self.d <= self.r:
            raise InstanceError(f"job {self.id!r}: deadline {self.d} <= release {self.r}")

    @property
    def window(self) -> Interval:
        return Interval(self.r, self.d)

    @property
    def schedulable(self) -> bool:
        return self.d - self.r >= self.p

    def fits(self, region: Interval) -> bool:
        """True if the job can run entirely inside ``region`` and its window."""
        return len(self.window.intersect(region)) >= self.p


@dataclass(frozen=True)
class Instance:
    jobs: tuple[Job, ...]
    m: int = 1
    offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if self.m < 1:
            raise InstanceError(f"machine count {self.m} < 1")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise InstanceError(f"duplicate job ids: {dup}")

    @property
    def T(self) -> int:
        return max((j.d for j in self.jobs), default=0)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def by_id(self) -> dict[str, Job]:
        return {j.id: j for j in self.jobs}

    def schedulable_jobs(self) -> list[Job]:
        """Schedulable jobs in id order (the canonical tie-break order)."""
        return sorted((j for j in self.jobs if j.schedulable), key=lambda j: j.id)

    def unschedulable_ids(self) -> list[str]:
        return sorted(j.id for j in self.jobs if not j.schedulable)


@dataclass(frozen=True)
class Placement:
    machine: int
    start: int


@dataclass(frozen=True)
class Schedule:
    entries: Mapping[str, Placement] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    @property
    def throughput(self) -> int:
        return len(self.entries)

    def merged(self, other: "Schedule") -> "Schedule":
        out = dict(self.entries)
        for k, v in other.entries.items():
            if k in out:
                raise ValueError(f"job {k!r} scheduled twice")
            out[k] = v
        return Schedule(out)


@dataclass(frozen=True)
class Violation:
    kind: str  # "window" | "overlap" | "unknown" | "duplicate" | "machine"
    job: str
    detail: str = ""
    other: str | None = None


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.feasible


def check_feasible(inst: Instance, sched: Schedule | Iterable) -> FeasibilityReport:
    """List every violation of ``sched`` against ``inst``.

    Accepts a :class:`Schedule` or a raw sequence of ``(id, machine, start)``
    triples; the latter form is how duplicate entries can be expressed.
    """
    if isinstance(sched, Schedule):
        rows = [(k, v.machine, v.start) for k, v in sched.entries.items()]
    else:
        rows = [tuple(x) for x in sched]
    jobs = inst.by_id
    out: list[Violation] = []
    seen: set[str] = set()
    per_machine: dict[int, list[tuple[int, int, str]]] = {}
    for jid, mach, start in rows:
        if jid in seen:
            out.append(Violation("duplicate", jid, "job appears more than once"))
            continue
        seen.add(jid)
        job = jobs.get(jid)
        if job is None:
            out.append(Violation("unknown", jid, "job id not in instance"))
            continue
        if not 0 <= mach < inst.m:
            out.append(Violation("machine", jid, f"machine {mach} not in [0,{inst.m})"))
            continue
        end = start + job.p
        if start < job.r or end > job.d:
            out.append(Violation("window", jid, f"[{start},{end}) not inside [{job.r},{job.d})"))
        per_machine.setdefault(mach, []).append((start, end, jid))
    for mach, ivs in sorted(per_machine.items()):
        ivs.sort()
        # sweep with the running max end catches every overlapping pair's later member
        hi_end, hi_id = None, None
        for start, end, jid in ivs:
            if hi_end is not None and start < hi_end:
                out.append(Violation("overlap", jid, f"machine {mach} at tick {start}", other=hi_id))
            if hi_end is None or end > hi_end:
                hi_end, hi_id = end, jid
    return FeasibilityReport(tuple(out))


def normalize(inst: Instance) -> Instance:
    """Shift all times so the earliest release is 0; record the shift."""
    if not inst.jobs:
        return inst
    shift = min(j.r for j in inst.jobs)
    if shift == 0:
        return inst
    jobs = tuple(replace(j, r=j.r - shift, d=j.d - shift) for j in inst.jobs)
    return Instance(jobs, inst.m, inst.offset + shift)


# ---------------------------------------------------------------- JSON I/O

def _read(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode()
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def _int_field(obj: Mapping, key: str, where: str) -> int:
    if key not in obj:
        raise InstanceError(f"{where}: missing field {key!r}")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise InstanceError(f"{where}: field {key!r} must be an integer, got {val!r}")
    return val


def instance_from_dict(doc: Mapping) -> Instance:
    if not isinstance(doc, Mapping):
        raise InstanceError("instance document must be a JSON object")
    m = _int_field(doc, "m", "instance")
    raw = doc.get("jobs")
    if not isinstance(raw, list):
        raise InstanceError("instance: 'jobs' must be a list")
    jobs = []
    for k, item in enumerate(raw):
        if not isinstance(item, Mapping) or "id" not in item:
            raise InstanceError(f"jobs[{k}]: expected object with an 'id'")
        jid = str(item["id"])
        where = f"job {jid!r}"
        jobs.append(Job(jid, _int_field(item, "p", where), _int_field(item, "r", where),
                        _int_field(item, "d", where)))
    return Instance(tuple(jobs), m)


def instance_to_dict(inst: Instance) -> dict:
    return {"jobs": [{"d": j.d, "id": j.id, "p": j.p, "r": j.r} for j in inst.jobs], "m": inst.m}


def load_instance(source: str | bytes | IO, format: str = "json") -> Instance:
    """Parse an instance document. Unschedulable jobs are kept (see ``Job.schedulable``)."""
    if format != "json":
        raise InstanceError(f"unsupported format {format!r}")
    try:
        doc = json.loads(_read(source))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error: {exc}") from exc
    return instance_from_dict(doc)


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True, indent=1) + "\n"


def save_instance(inst: Instance, target: IO | None = None) -> str:
    text = dumps_instance(inst)
    if target is not None:
        target.write(text)
    return text


def schedule_to_dict(sched: Schedule) -> dict:
    rows = [{"id": k, "machine": v.machine, "start": v.start} for k, v in sorted(sched.entries.items())]
    return {"entries": rows}


def schedule_rows(doc: Mapping) -> list[tuple[str, int, int]]:
    """Raw rows of a schedule document (duplicates preserved)."""
    if not isinstance(doc, Mapping) or not isinstance(doc.get("entries"), list):
        raise InstanceError("schedule document must be an object with an 'entries' list")
    rows = []
    for k, e in enumerate(doc["entries"]):
        if not isinstance(e, Mapping) or "id" not in e:
            raise InstanceError(f"entries[{k}]: expected object with an 'id'")
        where = f"entry {e['id']!r}"
        rows.append((str(e["id"]), _int_field(e, "machine", where), _int_field(e, "start", where)))
    return rows


def load_schedule(source: str | bytes | IO) -> Schedule:
    try:
        doc = json.loads(_read(source))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error: {exc}") from exc
    rows = schedule_rows(doc)
    ids = [r[0] for r in rows]
    if len(set(ids)) != len(ids):
        raise InstanceError("schedule lists a job more than once")
    return Schedule({jid: Placement(mach, start) for jid, mach, start in rows})


def dumps_schedule(sched: Schedule) -> str:
    return json.dumps(schedule_to_dict(sched), sort_keys=True, indent=1) + "\n"


def save_schedule(sched: Schedule, target: IO | None = None) -> str:
    text = dumps_schedule(sched)
    if target is not None:
        target.write(text)
    return text


# ---------------------------------------------------------------- generation

def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for one node of the seed tree ``seed -> path...``.

    Every random stream in the package is obtained this way, so a result
    depends only on the master seed and the (component, block, trial) path.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), *map(int, path)]))


def gen_random(n: int, T: int, m: int = 1, p_dist: tuple = ("uniform", 1, 8),
               slack_dist: tuple = ("uniform", 0, 10), seed: int = 0) -> Instance:
    """Random instance with every job schedulable.

    ``p_dist`` is ``("uniform", lo, hi)`` or ``("geometric", prob)``; processing
    times are clipped to ``[1, T]``. ``slack_dist`` is ``("uniform", lo, hi)``;
    the window length is ``p + slack`` clipped to ``T``. Releases are uniform
    over the positions that keep the window inside ``[0, T)``.
    """
    if n < 0 or T < 1 or m < 1:
        raise ValueError(f"need n >= 0, T >= 1, m >= 1 (got n={n}, T={T}, m={m})")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), 0x67656E]))
    kind = p_dist[0]
    if kind == "uniform":
        lo, hi = int(p_dist[1]), int(p_dist[2])
        if not 1 <= lo <= hi:
            raise ValueError(f"bad uniform p_dist {p_dist}")
        ps = rng.integers(lo, hi + 1, size=n)
    elif kind == "geometric":
        q = float(p_dist[1])
        if not 0 < q <= 1:
            raise ValueError(f"bad geometric p_dist {p_dist}")
        ps = rng.geometric(q, size=n)
    else:
        raise ValueError(f"unknown p_dist {kind!r}")
    if slack_dist[0] != "uniform" or not 0 <= int(slack_dist[1]) <= int(slack_dist[2]):
        raise ValueError(f"bad slack_dist {slack_dist}")
    slacks = rng.integers(int(slack_dist[1]), int(slack_dist[2]) + 1, size=n)
    jobs = []
    width = len(str(max(n - 1, 0)))
    for k in range(n):
        p = int(min(max(ps[k], 1), T))
        w = int(min(p + slacks[k], T))
        r = int(rng.integers(0, T - w + 1))
        jobs.append(Job(f"j{k:0{width}d}", p, r, r + w))
    return Instance(tuple(jobs), m)
