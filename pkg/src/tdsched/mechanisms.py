"""Coordination mechanisms: global priority rules and the quantities used to analyse them.

Every rule returns one list that all machines share; list scheduling over it
yields the mechanism's equilibria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import GameInstance, Number, ProcessingFunction, classify, completion_time, eval_processing, to_fraction
from .errors import ClassMismatch, MalformedProfile
from .schedule import Profile, Schedule, build_schedule
from .solvers import list_scheduling

POLICY_KINDS = ("SDR", "SDR_dynamic", "LBDR", "SBPT")
DEFAULT_EPSILON_RATE = Fraction(1, 2**40)


def _canonical(kind: str) -> str:
    for name in POLICY_KINDS:
        if kind.lower() == name.lower():
            return name
    raise ValueError(f"unknown policy {kind!r}")


def check_policy_class(game: GameInstance, kind: str) -> None:
    kind = _canonical(kind)
    cls = classify(game)
    if kind == "SBPT":
        needed = ("all_positive", "uniform_rate", "identical_speeds")
    else:
        needed = ("all_negative", "delay_averse", "identical_speeds")
    for flag in needed:
        if not getattr(cls, flag):
            raise ClassMismatch(f"{kind} needs a game that is {flag.replace('_', '-')}", flag)
    if kind == "SBPT" and not game.jobs[0].a > 0:
        raise ClassMismatch("SBPT needs a uniform rate strictly above zero", "uniform_rate")


def sdr_priority(game: GameInstance) -> tuple[int, ...]:
    """Smallest deterioration rate first; ties by job id."""
    check_policy_class(game, "SDR")
    return tuple(sorted(range(game.n), key=lambda i: (game.jobs[i].a, i)))


def lbdr_priority(game: GameInstance, epsilon_rate: Number = DEFAULT_EPSILON_RATE) -> tuple[int, ...]:
    """Largest ``b / a`` first, zero rates replaced by ``epsilon_rate``; ties by id."""
    check_policy_class(game, "LBDR")
    if not epsilon_rate > 0:
        raise ValueError("epsilon_rate must be positive")
    eps = game.numeric_mode.coerce(epsilon_rate)
    ratios = [pf.b / max(pf.a, eps) for pf in game.jobs]
    return tuple(sorted(range(game.n), key=lambda i: (-ratios[i], i)))


def lbdr_ratio(pf: ProcessingFunction, epsilon_rate: Number) -> Number:
    return pf.b / max(pf.a, epsilon_rate)


def sbpt_priority(game: GameInstance) -> tuple[int, ...]:
    """Shortest basic processing time first; ties by id."""
    check_policy_class(game, "SBPT")
    return tuple(sorted(range(game.n), key=lambda i: (game.jobs[i].b, i)))


def policy_priority(game: GameInstance, kind: str, **kwargs) -> tuple[int, ...]:
    kind = _canonical(kind)
    if kind == "SDR":
        return sdr_priority(game)
    if kind == "LBDR":
        return lbdr_priority(game, **kwargs)
    if kind == "SBPT":
        return sbpt_priority(game)
    return sdr_dynamic_order(game)[0]


def apply_policy(game: GameInstance, priority: Sequence[int]) -> GameInstance:
    """Same jobs and machines, every machine using ``priority``."""
    return game.with_priorities(list(priority))


def mechanism_outcome(
    game: GameInstance, kind: str, tie_break: str = "lowest_index"
) -> tuple[GameInstance, Profile, Schedule]:
    """Mechanism game, its list-scheduling profile and schedule."""
    kind = _canonical(kind)
    if kind == "SDR_dynamic":
        order, profile = sdr_dynamic_order(game)
        ruled = apply_policy(game, order)
        return ruled, profile, build_schedule(ruled, profile)
    ruled = apply_policy(game, policy_priority(game, kind))
    profile = list_scheduling(ruled, tie_break)
    return ruled, profile, build_schedule(ruled, profile)


def sdr_dynamic_order(game: GameInstance) -> tuple[tuple[int, ...], Profile]:
    """Event-driven dispatch by smallest realised shrink rate.

    At time 0 the ``m`` smallest-rate jobs start on machines in id order.
    Afterwards the lowest-id machine among the least loaded is served next.
    A waiting job's realised rate over ``[t, t']`` is
    ``(p(t) - p(t')) / (t' - t)``, where ``t'`` is the earliest completion
    strictly after ``t`` on another machine. With no such time, the rate at
    ``t`` itself is used (``a`` above the floor, 0 on it).
    """
    check_policy_class(game, "SDR")
    n, m = game.n, game.m
    mode = game.numeric_mode
    zero = mode.zero()
    pfs, speeds = game.jobs, game.speeds
    by_rate = sorted(range(n), key=lambda i: (pfs[i].a, i))
    loads = [zero] * m
    profile = [-1] * n
    order: list[int] = []
    for j, job in enumerate(by_rate[:m]):
        profile[job] = j
        order.append(job)
        loads[j] = completion_time(pfs[job], zero, speeds[j])
    waiting = set(by_rate[m:])
    while waiting:
        j = min(range(m), key=lambda k: (loads[k], k))
        t = loads[j]
        later = [loads[k] for k in range(m) if k != j and loads[k] > t]
        t_next = min(later) if later else None

        def realised(i: int) -> Number:
            pf = pfs[i]
            if t_next is None:
                above = pf.sign == -1 and pf.b - pf.a * t > pf.tau
                return pf.a if above else zero
            return (eval_processing(pf, t) - eval_processing(pf, t_next)) / (t_next - t)

        job = min(waiting, key=lambda i: (realised(i), i))
        waiting.discard(job)
        profile[job] = j
        order.append(job)
        loads[j] = completion_time(pfs[job], t, speeds[j])
    return tuple(order), tuple(profile)


def sdr_dynamic_schedule(game: GameInstance) -> Schedule:
    order, profile = sdr_dynamic_order(game)
    return build_schedule(apply_policy(game, order), profile)


def poa_bound(kind: str, m: int, a: Number | None = None) -> Number:
    """Proven price-of-anarchy bound of a mechanism.

    Rational where the bound is rational; LBDR may return a float.
    """
    kind = _canonical(kind)
    if m < 1:
        raise ValueError("m must be >= 1")
    if kind in ("SDR", "SDR_dynamic"):
        return Fraction(2)
    if kind == "LBDR":
        linear = Fraction(2 * m - 1, m)
        e_bound = math.e / (math.e - 1)
        return linear if linear >= e_bound else e_bound
    if a is None:
        raise ValueError("SBPT bound needs the uniform rate a")
    if not isinstance(a, float):
        a = to_fraction(a)
    return (2 * m + a * m - 1) / (m + a)


def _work_starts(schedule: Schedule, m: int) -> list[Number]:
    return [m * s for s in schedule.start]


def deterioration_density(game: GameInstance, schedule: Schedule, w: Number) -> Number:
    """Sum of rates of jobs not yet started once ``w`` units of work are done.

    Assumes unit-speed identical machines without idle time, so job ``i``
    starts when the total work reaches ``m * S_i``.
    """
    if w < 0:
        raise ValueError("workload must be >= 0")
    total = game.numeric_mode.zero()
    for i, work in enumerate(_work_starts(schedule, game.m)):
        if work > w:
            total += game.jobs[i].a
    return total


def density_integral(game: GameInstance, schedule: Schedule, w: Number) -> Number:
    """Integral of :func:`deterioration_density` over ``[0, w]``."""
    if w < 0:
        raise ValueError("workload must be >= 0")
    total = game.numeric_mode.zero()
    for i, work in enumerate(_work_starts(schedule, game.m)):
        total += game.jobs[i].a * min(w, work)
    return total


def density_breakpoints(game: GameInstance, schedule: Schedule) -> list[Number]:
    return sorted(set(_work_starts(schedule, game.m)))


def rounds_of(game: GameInstance, profile: Sequence[int]) -> list[frozenset[int]]:
    """Group jobs by their position on their machine."""
    sched = build_schedule(game, profile)
    counts = {len(seq) for seq in sched.sequences}
    if len(counts) != 1:
        raise MalformedProfile(f"machines hold different numbers of jobs: {sorted(counts)}")
    depth = counts.pop()
    return [frozenset(seq[k] for seq in sched.sequences) for k in range(depth)]


def pad_with_zero_jobs(game: GameInstance) -> GameInstance:
    """Add zero-length jobs so that ``m`` divides ``n``; they lead every list.

    The padding jobs share the game's uniform rate and take the next ids.
    """
    extra = (-game.n) % game.m
    if extra == 0:
        return game
    rate = game.jobs[0].a
    zero = game.numeric_mode.zero()
    jobs = list(game.jobs) + [ProcessingFunction(zero, rate, 1, None) for _ in range(extra)]
    pads = list(range(game.n, game.n + extra))
    lists = [pads + list(mach.priority) for mach in game.machines]
    names = None
    if game.names:
        names = list(game.names) + [f"pad{k}" for k in range(extra)]
    return GameInstance.build(jobs, game.speeds, lists, mode=game.numeric_mode, names=names, meta=game.meta)


@dataclass(frozen=True)
class ProductBoundRow:
    machine: int
    lhs: Number
    rhs: Number
    holds: bool


def lbdr_product_bound(
    game: GameInstance,
    profile: Sequence[int],
    epsilon_rate: Number = DEFAULT_EPSILON_RATE,
) -> tuple[Number, list[ProductBoundRow]]:
    """Per-machine check of ``1 - L_j / R <= prod (1 - b_i / R)``.

    ``R`` is the ratio of the last job in the LBDR list; loads come from
    ``profile`` run under that list. Returns ``R`` and one row per machine.
    """
    order = lbdr_priority(game, epsilon_rate)
    eps = game.numeric_mode.coerce(epsilon_rate)
    r_last = lbdr_ratio(game.jobs[order[-1]], eps)
    sched = build_schedule(apply_policy(game, order), profile)
    one = game.numeric_mode.coerce(1)
    mode = game.numeric_mode
    rows = []
    for j, seq in enumerate(sched.sequences):
        lhs = one - sched.loads[j] / r_last
        rhs = one
        for i in seq:
            rhs *= one - game.jobs[i].b / r_last
        rows.append(ProductBoundRow(j, lhs, rhs, mode.le(lhs, rhs)))
    return r_last, rows
