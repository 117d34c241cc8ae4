"""Schedule construction from a strategy profile."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import GameInstance, Number, completion_time, eval_processing
from .errors import MalformedProfile

Profile = tuple[int, ...]


def check_profile(game: GameInstance, profile: Sequence[int]) -> Profile:
    """Validate and normalise a profile to a tuple of machine ids."""
    prof = tuple(int(j) for j in profile)
    if len(prof) != game.n:
        raise MalformedProfile(f"profile has {len(prof)} entries for {game.n} jobs")
    for i, j in enumerate(prof):
        if not 0 <= j < game.m:
            raise MalformedProfile(f"job {game.label(i)} assigned to unknown machine {j}")
    return prof


@dataclass(frozen=True)
class Schedule:
    profile: Profile
    start: tuple[Number, ...]
    duration: tuple[Number, ...]
    completion: tuple[Number, ...]
    sequences: tuple[tuple[int, ...], ...]
    loads: tuple[Number, ...]
    makespan: Number

    def cost(self, job: int) -> Number:
        return self.completion[job]


def machine_timeline(
    game: GameInstance, machine: int, jobs: Iterable[int]
) -> tuple[tuple[int, ...], list[Number], list[Number], Number]:
    """Run ``jobs`` back to back on ``machine`` in its priority order.

    Returns the ordered jobs, their start and completion times, and the load.
    """
    rank = game.rank[machine]
    order = tuple(sorted(jobs, key=rank.__getitem__))
    speed = game.speeds[machine]
    t = game.numeric_mode.zero()
    starts, ends = [], []
    for job in order:
        starts.append(t)
        t = completion_time(game.jobs[job], t, speed)
        ends.append(t)
    return order, starts, ends, t


def build_schedule(game: GameInstance, profile: Sequence[int]) -> Schedule:
    prof = check_profile(game, profile)
    n = game.n
    zero = game.numeric_mode.zero()
    start: list[Number] = [zero] * n
    duration: list[Number] = [zero] * n
    completion: list[Number] = [zero] * n
    buckets: list[list[int]] = [[] for _ in range(game.m)]
    for i, j in enumerate(prof):
        buckets[j].append(i)
    sequences, loads = [], []
    for j in range(game.m):
        order, starts, ends, load = machine_timeline(game, j, buckets[j])
        for job, s, c in zip(order, starts, ends):
            start[job] = s
            completion[job] = c
            duration[job] = eval_processing(game.jobs[job], s)
        sequences.append(order)
        loads.append(load)
    return Schedule(
        profile=prof,
        start=tuple(start),
        duration=tuple(duration),
        completion=tuple(completion),
        sequences=tuple(sequences),
        loads=tuple(loads),
        makespan=max(completion),
    )


def total_processing(sched: Schedule) -> Number:
    """Sum of realised lengths ``p_i(S_i)``; equals ``sum_j L_j * s_j``."""
    total = sched.makespan * 0
    for d in sched.duration:
        total += d
    return total

