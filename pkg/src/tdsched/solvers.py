"""Constructive equilibrium algorithms, each gated by the game class it supports."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .core import GameInstance, Number, classify, completion_time, eval_processing
from .errors import ClassMismatch
from .schedule import Profile, build_schedule

TIE_BREAKS = ("lowest_index", "fewest_jobs", "longer_processing")


def _require(game: GameInstance, *flags: str) -> None:
    cls = classify(game)
    for flag in flags:
        if not getattr(cls, flag):
            raise ClassMismatch(f"game is not {flag.replace('_', '-')}", flag)


def _argmin(game: GameInstance, values: list[Number]) -> list[int]:
    """Indices whose value ties with the minimum (under the game's tolerance)."""
    best = min(values)
    eq = game.numeric_mode.eq
    return [j for j, v in enumerate(values) if eq(v, best)]


def solve_symmetric(game: GameInstance) -> Profile:
    """Fill the machine offering the earliest next completion, one job at a time.

    The chosen machine receives the first still-unassigned job of its own
    priority list.
    """
    _require(game, "symmetric")
    pf = game.jobs[0]
    loads = [game.numeric_mode.zero()] * game.m
    assigned = [-1] * game.n
    cursor = [0] * game.m
    for _ in range(game.n):
        comps = [completion_time(pf, loads[j], game.speeds[j]) for j in range(game.m)]
        j = _argmin(game, comps)[0]
        prio = game.machines[j].priority
        while assigned[prio[cursor[j]]] >= 0:
            cursor[j] += 1
        assigned[prio[cursor[j]]] = j
        loads[j] = comps[j]
    return tuple(assigned)


def solve_two_machines(game: GameInstance) -> Profile:
    """Start everyone on the fast machine, then offer each job one migration.

    Offers follow the slow machine's priority list and are judged against the
    schedule as it stands after earlier migrations.
    """
    _require(game, "two_machines", "delay_averse")
    fast = 0 if game.speeds[0] >= game.speeds[1] else 1
    slow = 1 - fast
    profile = [fast] * game.n
    mode = game.numeric_mode
    for job in game.machines[slow].priority:
        sched = build_schedule(game, profile)
        rank = game.rank[slow]
        start = mode.zero()
        for other in sched.sequences[slow]:
            if rank[other] > rank[job]:
                break
            start = sched.completion[other]
        moved = completion_time(game.jobs[job], start, game.speeds[slow])
        if mode.lt(moved, sched.completion[job]):
            profile[job] = slow
    return tuple(profile)


def _list_schedule(game: GameInstance, order, tie_break: str) -> Profile:
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"unknown tie-break {tie_break!r}")
    mode = game.numeric_mode
    loads = [mode.zero()] * game.m
    counts = [0] * game.m
    assigned = [-1] * game.n
    for job in order:
        pf = game.jobs[job]
        comps = [completion_time(pf, loads[j], game.speeds[j]) for j in range(game.m)]
        tied = _argmin(game, comps)
        if tie_break == "fewest_jobs":
            j = min(tied, key=lambda k: (counts[k], k))
        elif tie_break == "longer_processing":
            lengths = {k: eval_processing(pf, loads[k]) for k in tied}
            longest = max(lengths.values())
            j = min(k for k in tied if mode.eq(lengths[k], longest))
        else:
            j = tied[0]
        assigned[job] = j
        loads[j] = comps[j]
        counts[j] += 1
    return tuple(assigned)


def list_scheduling(game: GameInstance, tie_break: str = "lowest_index") -> Profile:
    """Greedy placement in the shared list order on the earliest-finishing machine."""
    _require(game, "global_list")
    return _list_schedule(game, game.machines[0].priority, tie_break)


GREEDY_RULES = ("load", "completion")


@dataclass(frozen=True)
class GreedyTrace:
    profile: Profile
    selections: int
    heap_pushes: int
    heap_pops: int
    pointer_advances: int


def greedy_general_trace(game: GameInstance, rule: str = "load") -> GreedyTrace:
    """Greedy for identical machines with per-machine lists, with operation counts.

    Each machine's candidate is the first unassigned job of its list.
    ``rule="load"`` serves the least-loaded machine (ties to the lower
    index); ``rule="completion"`` serves the machine whose candidate would
    finish earliest. Only the load rule is guaranteed to end in an
    equilibrium: under the completion rule a job can be placed behind a
    large load while a lightly loaded machine is still offering someone else.
    """
    _require(game, "delay_averse", "identical_speeds")
    if rule not in GREEDY_RULES:
        raise ValueError(f"unknown greedy rule {rule!r}")
    if rule == "completion":
        return _greedy_by_completion(game)
    n, m = game.n, game.m
    mode = game.numeric_mode
    loads = [mode.zero()] * m
    cursor = [0] * m
    assigned = [-1] * n
    heap = [(loads[j], j) for j in range(m)]
    heapq.heapify(heap)
    pushes, pops, advances = m, 0, 0
    for _ in range(n):
        load, j = heapq.heappop(heap)
        pops += 1
        if not mode.exact:
            # machines whose loads tie within tolerance yield to the lowest index
            held = []
            while heap and heap[0][0] <= load + mode.tol:
                held.append(heapq.heappop(heap))
                pops += 1
            pool = [(load, j), *held]
            pick = min(range(len(pool)), key=lambda k: pool[k][1])
            for k, entry in enumerate(pool):
                if k != pick:
                    heapq.heappush(heap, entry)
                    pushes += 1
            load, j = pool[pick]
        prio = game.machines[j].priority
        while assigned[prio[cursor[j]]] >= 0:
            cursor[j] += 1
            advances += 1
        job = prio[cursor[j]]
        assigned[job] = j
        loads[j] = completion_time(game.jobs[job], load, game.speeds[j])
        heapq.heappush(heap, (loads[j], j))
        pushes += 1
    return GreedyTrace(tuple(assigned), n, pushes, pops, advances)


def _greedy_by_completion(game: GameInstance) -> GreedyTrace:
    n, m = game.n, game.m
    mode = game.numeric_mode
    loads = [mode.zero()] * m
    cursor = [0] * m
    version = [0] * m
    assigned = [-1] * n
    heap: list[tuple[Number, int, int, int]] = []
    pushes = pops = advances = 0

    def offer(j: int) -> None:
        nonlocal pushes
        prio = game.machines[j].priority
        if cursor[j] < n:
            job = prio[cursor[j]]
            c = completion_time(game.jobs[job], loads[j], game.speeds[j])
            version[j] += 1
            heapq.heappush(heap, (c, j, version[j], job))
            pushes += 1

    def skip_assigned(j: int) -> bool:
        nonlocal advances
        prio = game.machines[j].priority
        moved = False
        while cursor[j] < n and assigned[prio[cursor[j]]] >= 0:
            cursor[j] += 1
            advances += 1
            moved = True
        return moved

    for j in range(m):
        offer(j)
    selections = 0
    while selections < n:
        c, j, ver, job = heapq.heappop(heap)
        pops += 1
        if ver != version[j]:
            continue
        if not mode.exact:
            held = []
            while heap and heap[0][0] <= c + mode.tol:
                cand = heapq.heappop(heap)
                pops += 1
                if cand[2] == version[cand[1]]:
                    held.append(cand)
            pool = [(c, j, ver, job), *held]
            pick = min(range(len(pool)), key=lambda k: pool[k][1])
            for k, entry in enumerate(pool):
                if k != pick:
                    heapq.heappush(heap, entry)
                    pushes += 1
            c, j, ver, job = pool[pick]
        assigned[job] = j
        loads[j] = c
        selections += 1
        for k in range(m):
            if skip_assigned(k) or k == j:
                offer(k)
    return GreedyTrace(tuple(assigned), selections, pushes, pops, advances)


def greedy_general(game: GameInstance, rule: str = "load") -> Profile:
    return greedy_general_trace(game, rule).profile
