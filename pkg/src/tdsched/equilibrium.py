"""Best responses, equilibrium checks, best-response dynamics and exhaustive search.

Exhaustive routines share a per-machine timeline cache keyed by the bitmask
of jobs on the machine, so a deviation costs one dictionary lookup instead of
a schedule rebuild.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence, Union

from .core import FLOAT, GameInstance, Number, classify, completion_time, eval_processing, min_completion_after
from .errors import BudgetExceeded, ClassMismatch, StepBudgetExceeded
from .schedule import Profile, Schedule, build_schedule, check_profile

DEFAULT_BUDGET = 10**7
POLICIES = ("round_robin", "lowest_index_deviator", "max_gain", "seeded_random")


@dataclass(frozen=True)
class Deviation:
    job: int
    source: int
    target: int
    old_cost: Number
    new_cost: Number


def _insertion(game: GameInstance, sched: Schedule, job: int, machine: int) -> tuple[Number, Number]:
    """Start and completion of ``job`` if it alone moved to ``machine``."""
    if sched.profile[job] == machine:
        return sched.start[job], sched.completion[job]
    rank = game.rank[machine]
    r = rank[job]
    start = game.numeric_mode.zero()
    for other in sched.sequences[machine]:
        if rank[other] >= r:
            break
        start = sched.completion[other]
    return start, completion_time(game.jobs[job], start, game.speeds[machine])


def deviation_cost(game: GameInstance, sched: Schedule, job: int, machine: int) -> Number:
    return _insertion(game, sched, job, machine)[1]


def best_response(
    game: GameInstance, profile: Sequence[int], job: int, schedule: Schedule | None = None
) -> tuple[int, Number]:
    """Machine minimising ``job``'s completion against the others' choices.

    Ties prefer the longer processing time, then the lower machine index.
    """
    sched = schedule if schedule is not None else build_schedule(game, profile)
    mode = game.numeric_mode
    options = []
    for j in range(game.m):
        start, comp = _insertion(game, sched, job, j)
        options.append((j, comp, eval_processing(game.jobs[job], start)))
    best = min(o[1] for o in options)
    tied = [o for o in options if mode.eq(o[1], best)]
    longest = max(o[2] for o in tied)
    choice = next(o for o in tied if mode.eq(o[2], longest))
    return choice[0], choice[1]


def _improving_moves(game: GameInstance, sched: Schedule) -> list[Deviation]:
    mode = game.numeric_mode
    moves = []
    for i in range(game.n):
        target, cost = best_response(game, sched.profile, i, sched)
        current = sched.completion[i]
        if mode.lt(cost, current):
            moves.append(Deviation(i, sched.profile[i], target, current, cost))
    return moves


def is_nash(
    game: GameInstance, profile: Sequence[int], schedule: Schedule | None = None
) -> tuple[bool, Deviation | None]:
    sched = schedule if schedule is not None else build_schedule(game, profile)
    mode = game.numeric_mode
    for i in range(game.n):
        target, cost = best_response(game, sched.profile, i, sched)
        if mode.lt(cost, sched.completion[i]):
            return False, Deviation(i, sched.profile[i], target, sched.completion[i], cost)
    return True, None


# ---------------------------------------------------------------- dynamics


@dataclass(frozen=True)
class Converged:
    profile: Profile
    steps: int


@dataclass(frozen=True)
class Cycle:
    """Profiles of a closed loop; ``deviations[k]`` leads from profile k to k+1."""

    cycle_profiles: tuple[Profile, ...]
    entry_step: int
    deviations: tuple[Deviation, ...]


BrdOutcome = Union[Converged, Cycle]


def brd(
    game: GameInstance,
    initial: Sequence[int],
    policy: str = "round_robin",
    max_steps: int = 100_000,
    seed: int | None = None,
) -> BrdOutcome:
    """Best-response dynamics: one strict best-response move per step.

    Deterministic policies report a ``Cycle`` as soon as a state repeats.
    ``seeded_random`` has no revisit detection and raises
    ``StepBudgetExceeded`` when ``max_steps`` runs out.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown activation policy {policy!r}")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    profile = check_profile(game, initial)
    rng = random.Random(seed)
    n = game.n
    pointer = 0
    detect = policy != "seeded_random"
    seen: dict[tuple, int] = {}
    history: list[Profile] = []
    moves_taken: list[Deviation] = []
    steps = 0
    while True:
        state = (profile, pointer) if policy == "round_robin" else (profile,)
        if detect:
            if state in seen:
                first = seen[state]
                return Cycle(tuple(history[first:]), first, tuple(moves_taken[first:]))
            seen[state] = steps
        history.append(profile)
        sched = build_schedule(game, profile)
        moves = _improving_moves(game, sched)
        if not moves:
            return Converged(profile, steps)
        if steps >= max_steps:
            raise StepBudgetExceeded(f"no verdict after {max_steps} steps")
        if policy == "lowest_index_deviator":
            move = moves[0]
        elif policy == "max_gain":
            move = max(moves, key=lambda d: d.old_cost - d.new_cost)
        elif policy == "seeded_random":
            move = rng.choice(moves)
        else:
            by_job = {d.job: d for d in moves}
            job = next((pointer + k) % n for k in range(n) if (pointer + k) % n in by_job)
            move = by_job[job]
            pointer = (job + 1) % n
        moves_taken.append(move)
        nxt = list(profile)
        nxt[move.job] = move.target
        profile = tuple(nxt)
        steps += 1


# ------------------------------------------------------- exhaustive search


def _check_budget(game: GameInstance, budget: int) -> None:
    if game.m**game.n > budget:
        raise BudgetExceeded(f"{game.m}^{game.n} profiles exceed the budget of {budget}")


class TimelineCache:
    """Memoised completion times of a job set run on one machine."""

    def __init__(self, game: GameInstance) -> None:
        self.game = game
        self._orders = [mach.priority for mach in game.machines]
        self._memo: list[dict[int, tuple[dict[int, Number], Number]]] = [{} for _ in range(game.m)]

    def get(self, machine: int, mask: int) -> tuple[dict[int, Number], Number]:
        memo = self._memo[machine]
        entry = memo.get(mask)
        if entry is None:
            t = self.game.numeric_mode.zero()
            speed = self.game.speeds[machine]
            pfs = self.game.jobs
            comp: dict[int, Number] = {}
            for job in self._orders[machine]:
                if mask >> job & 1:
                    t = completion_time(pfs[job], t, speed)
                    comp[job] = t
            entry = (comp, t)
            memo[mask] = entry
        return entry


def _sweep(game: GameInstance) -> Iterator[tuple[Profile, list[int]]]:
    m = game.m
    for prof in product(range(m), repeat=game.n):
        masks = [0] * m
        for i, j in enumerate(prof):
            masks[j] |= 1 << i
        yield prof, masks


def _masks_nash(game: GameInstance, cache: TimelineCache, prof: Profile, masks: list[int]) -> bool:
    lt = game.numeric_mode.lt
    m = game.m
    for i, j0 in enumerate(prof):
        current = cache.get(j0, masks[j0])[0][i]
        bit = 1 << i
        for j in range(m):
            if j != j0 and lt(cache.get(j, masks[j] | bit)[0][i], current):
                return False
    return True


def enumerate_ne(game: GameInstance, budget: int = DEFAULT_BUDGET) -> frozenset[Profile]:
    """All pure equilibria by exhaustive enumeration of the m^n profiles."""
    _check_budget(game, budget)
    cache = TimelineCache(game)
    return frozenset(prof for prof, masks in _sweep(game) if _masks_nash(game, cache, prof, masks))


def optimal_makespan(game: GameInstance, budget: int = DEFAULT_BUDGET) -> tuple[Number, Profile]:
    _check_budget(game, budget)
    cache = TimelineCache(game)
    lt = game.numeric_mode.lt
    best: Number | None = None
    witness: Profile = ()
    for prof, masks in _sweep(game):
        span = max(cache.get(j, mask)[1] for j, mask in enumerate(masks) if mask)
        if best is None or lt(span, best):
            best, witness = span, prof
    assert best is not None
    return best, witness


@dataclass(frozen=True)
class SweepStats:
    opt_makespan: Number
    opt_profile: Profile
    min_total_processing: Number
    min_total_profile: Profile
    max_total_processing: Number
    max_total_profile: Profile


def sweep_statistics(game: GameInstance, budget: int = DEFAULT_BUDGET) -> SweepStats:
    """Optimal makespan plus the range of total processing over all profiles."""
    _check_budget(game, budget)
    cache = TimelineCache(game)
    lt = game.numeric_mode.lt
    speeds = game.speeds
    span_best = tot_min = tot_max = None
    span_prof = min_prof = max_prof = ()
    for prof, masks in _sweep(game):
        span = None
        total = game.numeric_mode.zero()
        for j, mask in enumerate(masks):
            if mask:
                load = cache.get(j, mask)[1]
                total += load * speeds[j]
                if span is None or load > span:
                    span = load
        if span_best is None or lt(span, span_best):
            span_best, span_prof = span, prof
        if tot_min is None or lt(total, tot_min):
            tot_min, min_prof = total, prof
        if tot_max is None or lt(tot_max, total):
            tot_max, max_prof = total, prof
    return SweepStats(span_best, span_prof, tot_min, min_prof, tot_max, max_prof)


def enumerate_ne_via_ls(game: GameInstance, limit: int | None = None) -> frozenset[Profile]:
    """Equilibria of a global-list game as all tie branches of list scheduling.

    A job's cost only depends on jobs ahead of it in the shared list, so the
    equilibria are exactly the outcomes of greedy placement in list order
    under every resolution of argmin ties.
    """
    if not classify(game).global_list:
        raise ClassMismatch("list-scheduling enumeration needs a global priority list", "global_list")
    order = game.machines[0].priority
    mode = game.numeric_mode
    pfs, speeds = game.jobs, game.speeds
    n, m = game.n, game.m
    found: set[Profile] = set()
    assign = [0] * n
    loads = [mode.zero()] * m

    def walk(pos: int) -> None:
        if limit is not None and len(found) >= limit:
            return
        if pos == n:
            found.add(tuple(assign))
            return
        job = order[pos]
        comps = [completion_time(pfs[job], loads[j], speeds[j]) for j in range(m)]
        best = min(comps)
        for j in range(m):
            if mode.eq(comps[j], best):
                saved = loads[j]
                loads[j] = comps[j]
                assign[job] = j
                walk(pos + 1)
                loads[j] = saved

    walk(0)
    return frozenset(found)


def twin_links(
    game: GameInstance,
    allowed: Sequence[int] | None = None,
    group_of: Sequence[int] | None = None,
) -> list[int]:
    """For each job, an equal job directly ahead of it whose placement it may follow.

    Jobs ``i`` ahead of ``k`` are linked when they share a law, sit at
    consecutive positions of every list, and share their allowed mask and
    capacity group. In an equilibrium the earlier one cannot finish later,
    since it could take the later one's slot at the same cost. On identical
    machines with a law whose completion strictly increases in the start
    time, that forces ``i`` to start no later than ``k``; equal starts can be
    swapped. Without those two conditions no link is reported.
    """
    n = game.n
    links = [-1] * n
    speed = game.speeds[0]
    if any(s != speed for s in game.speeds):
        return links
    first = game.machines[0].priority
    for pos in range(1, n):
        prev, job = first[pos - 1], first[pos]
        pf = game.jobs[job]
        if game.jobs[prev] != pf or not (pf.sign == 1 or pf.a < speed):
            continue
        if allowed is not None and allowed[prev] != allowed[job]:
            continue
        if group_of is not None and group_of[prev] != group_of[job]:
            continue
        if all(r[job] == r[prev] + 1 for r in game.rank):
            links[job] = prev
    return links


def search_ne(
    game: GameInstance,
    *,
    first_only: bool = False,
    break_symmetry: bool = False,
    node_budget: int | None = None,
    allowed: Sequence[int] | None = None,
    group_caps: Sequence[tuple[Iterable[int], int]] = (),
    float_bounds: bool = False,
) -> frozenset[Profile]:
    """Exact equilibrium search by chronological construction with pruning.

    Profiles are built machine by machine in time order: the open machine
    with the smallest load either receives its next job or is closed. Placing
    a job forbids that machine to every unplaced job it would have to follow,
    so each profile corresponds to exactly one branch. A branch is cut when
    some job provably has a strictly better deviation than any cost it can
    still reach. Leaves are confirmed with :func:`is_nash`.

    ``break_symmetry`` places linked equal jobs (see :func:`twin_links`) in
    list order. That keeps at least one equilibrium whenever one exists but
    not the full set, so it suits ``first_only``.

    ``allowed`` (bitmask of machines per job) and ``group_caps`` (job set,
    most members per machine) restrict which profiles are explored; they
    never restrict deviations, so every reported profile is a true
    equilibrium but equilibria outside the restriction are missed.

    With ``float_bounds`` an exact game is searched with float arithmetic;
    cuts need a margin above the float tolerance and leaves are confirmed
    exactly. Meant for instances with moderate magnitudes.
    """
    n, m = game.n, game.m
    work = game.with_mode(FLOAT) if float_bounds and game.numeric_mode.exact else game
    mode = work.numeric_mode
    lt = mode.lt
    zero = mode.zero()
    pfs, speeds, rank = work.jobs, work.speeds, work.rank

    seq_ranks: list[list[int]] = [[] for _ in range(m)]
    seq_comp: list[list[Number]] = [[] for _ in range(m)]
    load: list[Number] = [zero] * m
    closed = [False] * m
    where = [-1] * n
    cost: list[Number | None] = [None] * n
    everything = (1 << m) - 1
    forbidden = [0] * n if allowed is None else [everything & ~int(mask) for mask in allowed]
    if len(forbidden) != n:
        raise ValueError("need one allowed-machine mask per job")
    group_of = [-1] * n
    caps: list[int] = []
    for g, (members, cap) in enumerate(group_caps):
        caps.append(int(cap))
        for job in members:
            group_of[job] = g
    group_count = [[0] * m for _ in caps]
    links = twin_links(game, allowed, group_of) if break_symmetry else [-1] * n
    members_of = [[y for y in range(n) if group_of[y] == g] for g in range(len(caps))]
    unplaced = set(range(n))
    placed: list[int] = []
    found: set[Profile] = set()
    nodes = 0

    comp_memo: dict[tuple[int, int, Number], Number] = {}
    floor_memo: dict[tuple[int, int, Number], Number] = {}

    def finish(job: int, j: int, start: Number) -> Number:
        key = (job, j, start)
        c = comp_memo.get(key)
        if c is None:
            c = comp_memo[key] = completion_time(pfs[job], start, speeds[j])
        return c

    def earliest(job: int, j: int, start: Number) -> Number:
        key = (job, j, start)
        c = floor_memo.get(key)
        if c is None:
            c = floor_memo[key] = min_completion_after(pfs[job], start, speeds[j])
        return c

    # per machine, the best rank among jobs that may still be appended there
    pending = [0] * m

    def refresh_pending(machines: Iterable[int] = range(m)) -> None:
        for j in machines:
            best = n
            bit = 1 << j
            rj = rank[j]
            for y in unplaced:
                if forbidden[y] & bit:
                    continue
                g = group_of[y]
                if g >= 0 and group_count[g][j] >= caps[g]:
                    continue
                if rj[y] < best:
                    best = rj[y]
            pending[j] = best

    def fixed_deviation(job: int, j: int) -> Number | None:
        """Deviation cost of ``job`` to ``j`` when no later placement can change it."""
        ranks = seq_ranks[j]
        r = rank[j][job]
        if not closed[j] and (not ranks or ranks[-1] < r):
            if pending[j] < r:
                return None
            return finish(job, j, load[j])
        k = bisect_left(ranks, r)
        start = seq_comp[j][k - 1] if k else zero
        return finish(job, j, start)

    def placed_ok(touched: Sequence[int], newcomer: int = -1) -> bool:
        """Check deviations into ``touched`` machines, and all of ``newcomer``'s."""
        if newcomer >= 0:
            home = where[newcomer]
            for j in range(m):
                if j != home:
                    dev = fixed_deviation(newcomer, j)
                    if dev is not None and lt(dev, cost[newcomer]):
                        return False
        for i in placed:
            home = where[i]
            for j in touched:
                if j != home:
                    dev = fixed_deviation(i, j)
                    if dev is not None and lt(dev, cost[i]):
                        return False
        return True

    def touched_since(base: list[int], j: int) -> list[int]:
        return [k for k in range(m) if k == j or pending[k] != base[k]]

    def capacity_ok() -> bool:
        for g, cap in enumerate(caps):
            waiting = [y for y in members_of[g] if where[y] < 0]
            if not waiting:
                continue
            room = 0
            for j in range(m):
                if closed[j] or group_count[g][j] >= cap:
                    continue
                bit = 1 << j
                if any(not forbidden[y] & bit for y in waiting):
                    room += cap - group_count[g][j]
            if room < len(waiting):
                return False
        return True

    def unplaced_ok() -> bool:
        if caps and not capacity_ok():
            return False
        for y in unplaced:
            fb = forbidden[y]
            g = group_of[y]
            lower = None
            barred = 0
            for j in range(m):
                if closed[j] or fb >> j & 1 or (g >= 0 and group_count[g][j] >= caps[g]):
                    barred |= 1 << j
                    continue
                c = earliest(y, j, load[j])
                if lower is None or c < lower:
                    lower = c
            if lower is None:
                return False
            for j in range(m):
                if barred >> j & 1:
                    dev = fixed_deviation(y, j)
                    if dev is not None and lt(dev, lower):
                        return False
        return True

    def descend() -> bool:
        nonlocal nodes
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            raise BudgetExceeded(f"search exceeded {node_budget} nodes")
        if not unplaced:
            prof = tuple(where)
            if is_nash(game, prof)[0]:
                found.add(prof)
                return first_only
            return False
        open_machines = [j for j in range(m) if not closed[j]]
        if not open_machines:
            return False
        j = min(open_machines, key=lambda k: (load[k], k))
        base = pending[:]
        t = load[j]
        rj = rank[j]
        for x in sorted(unplaced):
            if forbidden[x] >> j & 1:
                continue
            if links[x] >= 0 and links[x] in unplaced:
                continue
            g = group_of[x]
            if g >= 0 and group_count[g][j] >= caps[g]:
                continue
            bit = 1 << j
            newly = [y for y in unplaced if y != x and rj[y] < rj[x] and not forbidden[y] & bit]
            c = finish(x, j, t)
            unplaced.discard(x)
            placed.append(x)
            where[x], cost[x] = j, c
            seq_ranks[j].append(rj[x])
            seq_comp[j].append(c)
            load[j] = c
            for y in newly:
                forbidden[y] |= bit
            if g >= 0:
                group_count[g][j] += 1
            refresh_pending([k for k in range(m) if k == j or base[k] == rank[k][x]])
            if placed_ok(touched_since(base, j), x) and unplaced_ok() and descend():
                return True
            if g >= 0:
                group_count[g][j] -= 1
            for y in newly:
                forbidden[y] &= ~bit
            load[j] = t
            seq_comp[j].pop()
            seq_ranks[j].pop()
            where[x], cost[x] = -1, None
            placed.pop()
            unplaced.add(x)
            pending[:] = base
        closed[j] = True
        if placed_ok([j]) and unplaced_ok() and descend():
            return True
        closed[j] = False
        pending[:] = base
        return False

    refresh_pending()
    descend()
    return frozenset(found)


def ne_exists(game: GameInstance, node_budget: int | None = None) -> bool:
    return bool(search_ne(game, first_only=True, break_symmetry=True, node_budget=node_budget))


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class EquilibriumReport:
    ne_profiles: tuple[Profile, ...]
    opt_makespan: Number
    opt_profile: Profile
    max_ne_makespan: Number | None
    min_ne_makespan: Number | None
    worst_ne: Profile | None
    best_ne: Profile | None
    poa: Number | None
    pos: Number | None

    @property
    def has_ne(self) -> bool:
        return bool(self.ne_profiles)


def ne_set(game: GameInstance, method: str = "brute", budget: int = DEFAULT_BUDGET) -> frozenset[Profile]:
    if method == "brute":
        return enumerate_ne(game, budget)
    if method == "ls":
        return enumerate_ne_via_ls(game)
    if method == "search":
        return search_ne(game, node_budget=budget)
    raise ValueError(f"unknown enumeration method {method!r}")


def compute_poa_pos(
    game: GameInstance, budget: int = DEFAULT_BUDGET, method: str = "brute"
) -> EquilibriumReport:
    """Price of anarchy and stability against the brute-force optimum.

    ``poa`` and ``pos`` are None when the game has no pure equilibrium.
    """
    opt, witness = optimal_makespan(game, budget)
    profiles = tuple(sorted(ne_set(game, method, budget)))
    if not profiles:
        return EquilibriumReport((), opt, witness, None, None, None, None, None, None)
    spans = [build_schedule(game, p).makespan for p in profiles]
    hi = max(range(len(profiles)), key=spans.__getitem__)
    lo = min(range(len(profiles)), key=spans.__getitem__)
    return EquilibriumReport(
        ne_profiles=profiles,
        opt_makespan=opt,
        opt_profile=witness,
        max_ne_makespan=spans[hi],
        min_ne_makespan=spans[lo],
        worst_ne=profiles[hi],
        best_ne=profiles[lo],
        poa=_ratio(spans[hi], opt),
        pos=_ratio(spans[lo], opt),
    )


def _ratio(value: Number, opt: Number) -> Number:
    if opt == 0:
        return value * 0 + 1 if value == 0 else float("inf")
    return value / opt
