"""Domain types, numeric backend, processing-time laws and game-class detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Mapping, Sequence, Union

from .errors import DomainError, InvalidInstance

Number = Union[Fraction, float]
NumberLike = Union[Fraction, float, int, str]


def to_fraction(value: NumberLike) -> Fraction:
    """Convert a user-supplied number to an exact rational.

    Floats go through their shortest decimal representation, so ``1.05``
    becomes ``21/20`` rather than the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse number {value!r}") from exc
    raise TypeError(f"unsupported number type {type(value).__name__}")


@dataclass(frozen=True)
class NumericMode:
    """Arithmetic backend for a game: exact rationals or tolerant floats."""

    kind: str = "rational"
    tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.kind not in ("rational", "float"):
            raise ValueError(f"numeric mode must be 'rational' or 'float', got {self.kind!r}")
        if not (self.tol >= 0):
            raise ValueError("tolerance must be non-negative")

    @property
    def exact(self) -> bool:
        return self.kind == "rational"

    def coerce(self, value: NumberLike) -> Number:
        if self.exact:
            return to_fraction(value)
        if isinstance(value, str):
            return float(to_fraction(value))
        if isinstance(value, bool):
            raise TypeError("booleans are not numbers here")
        out = float(value)
        if not math.isfinite(out):
            raise DomainError(f"non-finite value {value!r}")
        return out

    def zero(self) -> Number:
        return Fraction(0) if self.exact else 0.0

    def lt(self, x: Number, y: Number) -> bool:
        return x < y if self.exact else x < y - self.tol

    def le(self, x: Number, y: Number) -> bool:
        return x <= y if self.exact else x <= y + self.tol

    def eq(self, x: Number, y: Number) -> bool:
        return x == y if self.exact else abs(x - y) <= self.tol

    def gt(self, x: Number, y: Number) -> bool:
        return self.lt(y, x)

    def ge(self, x: Number, y: Number) -> bool:
        return self.le(y, x)


RATIONAL = NumericMode("rational")
FLOAT = NumericMode("float")


@dataclass(frozen=True)
class ProcessingFunction:
    """Linear start-time-dependent length law of one job.

    ``sign=+1`` gives ``b + a*t``; ``sign=-1`` gives ``max(tau, b - a*t)``.
    A negative law with zero rate is stored as a fixed-length positive law.
    """

    b: Number
    a: Number
    sign: int = 1
    tau: Number | None = None

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise InvalidInstance(f"sign must be +1 or -1, got {self.sign!r}")
        if self.b < 0:
            raise InvalidInstance(f"basic processing time must be >= 0, got {self.b}")
        if self.a < 0:
            raise InvalidInstance(f"deterioration rate must be >= 0, got {self.a}")
        if self.sign == 1:
            if self.tau is not None:
                raise InvalidInstance("threshold is only defined for negative deterioration")
            return
        if self.tau is None or not (self.tau > 0):
            raise InvalidInstance("negative deterioration needs a threshold > 0")
        if self.tau > self.b:
            raise InvalidInstance(f"threshold {self.tau} exceeds basic time {self.b}")
        if self.a == 0:
            object.__setattr__(self, "sign", 1)
            object.__setattr__(self, "tau", None)

    @classmethod
    def positive(cls, b: NumberLike, a: NumberLike, mode: NumericMode = RATIONAL) -> ProcessingFunction:
        return cls(mode.coerce(b), mode.coerce(a), 1, None)

    @classmethod
    def negative(
        cls, b: NumberLike, a: NumberLike, tau: NumberLike, mode: NumericMode = RATIONAL
    ) -> ProcessingFunction:
        return cls(mode.coerce(b), mode.coerce(a), -1, mode.coerce(tau))

    @classmethod
    def fixed(cls, b: NumberLike, mode: NumericMode = RATIONAL) -> ProcessingFunction:
        return cls(mode.coerce(b), mode.zero(), 1, None)

    def coerced(self, mode: NumericMode) -> ProcessingFunction:
        tau = None if self.tau is None else mode.coerce(self.tau)
        return ProcessingFunction(mode.coerce(self.b), mode.coerce(self.a), self.sign, tau)

    @property
    def is_fixed(self) -> bool:
        return self.a == 0

    @property
    def floor_time(self) -> Number | None:
        """Start time from which a negative law sits at its threshold."""
        if self.sign == 1 or self.a == 0:
            return None
        return (self.b - self.tau) / self.a

    def __call__(self, t: Number) -> Number:
        return eval_processing(self, t)


@dataclass(frozen=True)
class Machine:
    id: int
    speed: Number
    priority: tuple[int, ...]


@dataclass(frozen=True)
class GameClass:
    symmetric: bool = False
    two_machines: bool = False
    identical_speeds: bool = False
    global_list: bool = False
    all_positive: bool = False
    all_negative: bool = False
    delay_averse: bool = False
    uniform_rate: bool = False

    @classmethod
    def of(cls, *names: str) -> GameClass:
        known = {f.name for f in fields(cls)}
        for name in names:
            if name not in known:
                raise ValueError(f"unknown class flag {name!r}")
        return cls(**{name: True for name in names})

    def flags(self) -> frozenset[str]:
        return frozenset(f.name for f in fields(self) if getattr(self, f.name))

    def includes(self, other: GameClass) -> bool:
        """True when every flag set in ``other`` is also set here."""
        return other.flags() <= self.flags()


@dataclass(frozen=True)
class GameInstance:
    """Jobs (indexed 0..n-1), machines (indexed 0..m-1) and the numeric mode.

    Numbers are converted to the mode's representation on construction.
    ``names`` are optional display labels; ``meta`` records provenance.
    """

    jobs: tuple[ProcessingFunction, ...]
    machines: tuple[Machine, ...]
    numeric_mode: NumericMode = RATIONAL
    names: tuple[str, ...] | None = None
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        mode = self.numeric_mode
        jobs = tuple(pf.coerced(mode) for pf in self.jobs)
        if not jobs:
            raise InvalidInstance("a game needs at least one job")
        if not self.machines:
            raise InvalidInstance("a game needs at least one machine")
        n = len(jobs)
        machines = []
        for idx, mach in enumerate(self.machines):
            if mach.id != idx:
                raise InvalidInstance(f"machine ids must be dense 0..m-1 (found {mach.id} at {idx})")
            speed = mode.coerce(mach.speed)
            if not speed > 0:
                raise InvalidInstance(f"machine {idx} speed must be > 0")
            prio = tuple(int(i) for i in mach.priority)
            if sorted(prio) != list(range(n)):
                raise InvalidInstance(f"priority list of machine {idx} is not a permutation of the jobs")
            machines.append(Machine(idx, speed, prio))
        if self.names is not None:
            names = tuple(str(x) for x in self.names)
            if len(names) != n or len(set(names)) != n:
                raise InvalidInstance("job names must be unique and one per job")
            object.__setattr__(self, "names", names)
        object.__setattr__(self, "jobs", jobs)
        object.__setattr__(self, "machines", tuple(machines))
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def build(
        cls,
        jobs: Sequence[ProcessingFunction],
        speeds: Sequence[NumberLike],
        priorities: Sequence[int] | Sequence[Sequence[int]] | None = None,
        *,
        mode: NumericMode = RATIONAL,
        names: Sequence[str] | None = None,
        meta: Mapping[str, Any] | None = None,
    ) -> GameInstance:
        """Convenience constructor.

        ``priorities`` may be None (identity global list), one list shared by
        every machine, or one list per machine.
        """
        n, m = len(jobs), len(speeds)
        if priorities is None:
            lists = [tuple(range(n))] * m
        elif len(priorities) > 0 and isinstance(priorities[0], int):
            lists = [tuple(priorities)] * m  # type: ignore[arg-type]
        else:
            if len(priorities) != m:
                raise InvalidInstance("need one priority list per machine")
            lists = [tuple(p) for p in priorities]  # type: ignore[union-attr]
        machines = tuple(Machine(j, speeds[j], lists[j]) for j in range(m))
        return cls(tuple(jobs), machines, mode, tuple(names) if names else None, dict(meta or {}))

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def m(self) -> int:
        return len(self.machines)

    @cached_property
    def speeds(self) -> tuple[Number, ...]:
        return tuple(mach.speed for mach in self.machines)

    @cached_property
    def rank(self) -> tuple[tuple[int, ...], ...]:
        """``rank[j][i]`` is the position of job ``i`` in machine ``j``'s list."""
        out = []
        for mach in self.machines:
            r = [0] * self.n
            for pos, job in enumerate(mach.priority):
                r[job] = pos
            out.append(tuple(r))
        return tuple(out)

    @property
    def s_max(self) -> Number:
        return max(self.speeds)

    def label(self, job: int) -> str:
        return self.names[job] if self.names else str(job)

    def job_index(self, token: str) -> int:
        """Resolve a job name or numeric id."""
        if self.names and token in self.names:
            return self.names.index(token)
        try:
            idx = int(token)
        except ValueError:
            raise InvalidInstance(f"unknown job {token!r}") from None
        if not 0 <= idx < self.n:
            raise InvalidInstance(f"job id {idx} out of range")
        return idx

    def with_priorities(self, priorities: Sequence[int] | Sequence[Sequence[int]]) -> GameInstance:
        return GameInstance.build(
            self.jobs, self.speeds, priorities, mode=self.numeric_mode, names=self.names, meta=self.meta
        )

    def with_mode(self, mode: NumericMode) -> GameInstance:
        return replace(self, numeric_mode=mode)


def eval_processing(pf: ProcessingFunction, t: Number) -> Number:
    if t < 0:
        raise DomainError(f"start time must be >= 0, got {t}")
    if pf.sign == 1:
        return pf.b + pf.a * t
    return max(pf.tau, pf.b - pf.a * t)


def completion_time(pf: ProcessingFunction, t: Number, s: Number) -> Number:
    if not s > 0:
        raise DomainError(f"speed must be > 0, got {s}")
    return t + eval_processing(pf, t) / s


def optimal_start(
    pf: ProcessingFunction, s: Number, mode: NumericMode = RATIONAL
) -> tuple[Number, bool]:
    """Start time minimising completion on a machine of speed ``s``.

    When the rate equals the speed, completion is flat on
    ``[0, (b - tau)/a]``; the right end is returned (longest processing
    time) and flagged as not unique.
    """
    if not s > 0:
        raise DomainError(f"speed must be > 0, got {s}")
    if pf.sign == 1 or pf.a == 0 or mode.lt(pf.a, s):
        return mode.zero(), True
    t_floor = (pf.b - pf.tau) / pf.a
    if mode.eq(pf.a, s):
        return t_floor, False
    return t_floor, True


def min_completion_after(pf: ProcessingFunction, t0: Number, s: Number) -> Number:
    """Smallest completion time reachable by starting at any ``t >= t0``."""
    if pf.sign == 1 or pf.a <= s:
        return completion_time(pf, t0, s)
    t_floor = (pf.b - pf.tau) / pf.a
    return completion_time(pf, max(t0, t_floor), s)


def is_delay_averse(pf: ProcessingFunction, s_max: Number, mode: NumericMode = RATIONAL) -> bool:
    return pf.sign == 1 or mode.le(pf.a, s_max)


def classify(game: GameInstance) -> GameClass:
    mode = game.numeric_mode
    jobs = game.jobs
    first = jobs[0]
    s_max = game.s_max
    speeds = game.speeds
    lists = {mach.priority for mach in game.machines}
    return GameClass(
        symmetric=all(pf == first for pf in jobs),
        two_machines=game.m == 2,
        identical_speeds=all(mode.eq(s, speeds[0]) for s in speeds),
        global_list=len(lists) == 1,
        all_positive=all(pf.sign == 1 for pf in jobs),
        # fixed-length jobs are compatible with either sign
        all_negative=all(pf.sign == -1 or pf.a == 0 for pf in jobs),
        delay_averse=all(is_delay_averse(pf, s_max, mode) for pf in jobs),
        uniform_rate=all(mode.eq(pf.a, first.a) for pf in jobs),
    )

