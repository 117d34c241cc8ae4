"""Named instances, parametric lower-bound families, the matching reduction and random sampling."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    RATIONAL,
    GameClass,
    GameInstance,
    NumberLike,
    NumericMode,
    ProcessingFunction,
    classify,
    to_fraction,
)
from .equilibrium import search_ne
from .errors import BudgetExceeded, InfeasibleSpec, InvalidInstance, ParameterInfeasible

PF = ProcessingFunction


def _meta(family: str, **params) -> dict:
    return {"family": family, "params": {k: str(v) for k, v in params.items()}}


# ------------------------------------------------------------ fixed games


def gen_noNE2(mode: NumericMode = RATIONAL) -> GameInstance:
    """Two negative jobs on speeds (1, 1/2) whose best responses cycle."""
    u = PF.negative(24, "3/2", 3, mode)
    v = PF.negative(8, "3/2", 3, mode)
    return GameInstance.build(
        [u, v], [1, "1/2"], [[0, 1], [1, 0]], mode=mode, names=["u", "v"], meta=_meta("noNE2")
    )


def _three_negative_jobs(mode: NumericMode) -> list[ProcessingFunction]:
    return [
        PF.negative(5, "1.05", "0.2", mode),
        PF.negative(4, "1.1", "0.2", mode),
        PF.negative(3, "1.2", "0.2", mode),
    ]


def gen_noNE3(mode: NumericMode = RATIONAL) -> GameInstance:
    """Three negative jobs on two unit-speed machines without a pure equilibrium."""
    return GameInstance.build(
        _three_negative_jobs(mode),
        [1, 1],
        [[1, 0, 2], [2, 0, 1]],
        mode=mode,
        names=["u", "v", "w"],
        meta=_meta("noNE3"),
    )


def gen_sbpt_tight(mode: NumericMode = RATIONAL) -> GameInstance:
    jobs = [PF.positive(1, 1, mode), PF.positive(1, 1, mode), PF.positive(3, 1, mode)]
    return GameInstance.build(jobs, [1, 1], None, mode=mode, names=["u", "v", "w"], meta=_meta("sbpt_tight"))


# ------------------------------------------------------- parametric games


def gen_poa_r(m: int, r: NumberLike, mode: NumericMode = RATIONAL) -> GameInstance:
    """``m`` unit jobs then one job ``2 + (2r-3) t`` on ``m`` identical machines.

    Every equilibrium has makespan ``2r`` while the optimum is 2. The rate
    must be non-negative, so ``r >= 3/2``.
    """
    if m < 2:
        raise ParameterInfeasible("need m >= 2")
    r = to_fraction(r)
    if r < Fraction(3, 2):
        raise ParameterInfeasible("r must be at least 3/2 so that the rate 2r-3 is non-negative")
    jobs = [PF.fixed(1, mode) for _ in range(m)] + [PF.positive(2, 2 * r - 3, mode)]
    names = [f"j{i + 1}" for i in range(m + 1)]
    return GameInstance.build(jobs, [1] * m, None, mode=mode, names=names, meta=_meta("poa_r", m=m, r=r))


def exponential_w(m: int, k: int, a: NumberLike) -> Fraction:
    return (1 + to_fraction(a)) ** (m * k)


def gen_exponential(m: int, k: int, a: NumberLike, mode: NumericMode = RATIONAL) -> GameInstance:
    """Cascading-delay family with ``n = mk + m + 1`` uniform-rate jobs.

    Job ids follow the global list: ``y_0..y_{m-1}``, then ``x_0..x_{mk-1}``,
    then ``y_m``.
    """
    if m < 2 or k < 1:
        raise ParameterInfeasible("need m >= 2 and k >= 1")
    a = to_fraction(a)
    if not a > 0:
        raise ParameterInfeasible("rate must be positive")
    w = exponential_w(m, k, a)
    big = (w - 1) / a
    jobs = [PF.positive(big, a, mode) for _ in range(m)]
    jobs += [PF.positive(1, a, mode) for _ in range(m * k)]
    jobs.append(PF.positive(big, a, mode))
    names = [f"y{i}" for i in range(m)] + [f"x{i}" for i in range(m * k)] + [f"y{m}"]
    meta = _meta("exponential", m=m, k=k, a=a)
    meta["described_opt"] = list(exponential_opt_profile(m, k))
    return GameInstance.build(jobs, [1] * m, None, mode=mode, names=names, meta=meta)


def exponential_opt_profile(m: int, k: int) -> tuple[int, ...]:
    """``y_0, y_1`` on machine 0; all x-jobs and ``y_m`` on machine 1; ``y_j`` alone on machine j."""
    prof = [0, 0] + list(range(2, m))
    prof += [1] * (m * k)
    prof.append(1)
    return tuple(prof)


def exponential_ls_makespan(m: int, k: int, a: NumberLike) -> Fraction:
    """Makespan of lowest-index list scheduling on :func:`gen_exponential`.

    The last x-job on machine 0 ends at ``C = (w(1+a)^k - 1)/a``; ``y_m``
    then runs from ``C`` for ``(w-1)/a + a C``.
    """
    a = to_fraction(a)
    w = exponential_w(m, k, a)
    last_x = (w * (1 + a) ** k - 1) / a
    return (1 + a) * last_x + (w - 1) / a


def exponential_opt_makespan(m: int, k: int, a: NumberLike) -> Fraction:
    a = to_fraction(a)
    w = exponential_w(m, k, a)
    return w - 1 + 2 * (w - 1) / a


def _lb_jobs(m: int, eps_prime: Fraction, mode: NumericMode) -> tuple[list[ProcessingFunction], list[str]]:
    jobs = [PF.fixed(1 - eps_prime, mode)]
    jobs += [PF.fixed((1 - eps_prime) / m, mode) for _ in range(m * (m - 1))]
    jobs += [PF.negative(1, 1, eps_prime, mode) for _ in range(m)]
    names = ["a"] + [f"u{i + 1}" for i in range(m * (m - 1))] + [f"v{i + 1}" for i in range(m)]
    return jobs, names


def _check_lb_params(m: int, eps: NumberLike) -> Fraction:
    if m < 2:
        raise ParameterInfeasible("need m >= 2")
    eps = to_fraction(eps)
    if not 0 < eps < 1:
        raise ParameterInfeasible("eps must lie in (0, 1)")
    return eps


def gen_arbitrary_lb(m: int, eps: NumberLike, mode: NumericMode = RATIONAL) -> GameInstance:
    """Negative-rate game on identical machines with ratio ``3 - 1/m - eps``.

    Ids: job ``a`` is 0, ``u_1..u_{m(m-1)}`` are 1.., ``v_1..v_m`` follow.
    Machine ``j`` lists ``v_j``, the u-jobs, ``a``, then the other v-jobs.
    """
    eps = _check_lb_params(m, eps)
    eps_prime = Fraction(m, 2 * m - 1) * eps
    jobs, names = _lb_jobs(m, eps_prime, mode)
    n_u = m * (m - 1)
    u_ids = list(range(1, n_u + 1))
    v_ids = list(range(n_u + 1, n_u + 1 + m))
    lists = []
    for j in range(m):
        lists.append([v_ids[j]] + u_ids + [0] + [v for v in v_ids if v != v_ids[j]])
    ne = [0] * len(jobs)
    opt = [0] * len(jobs)
    for j in range(m):
        ne[v_ids[j]] = j
        for q in range(m - 1):
            ne[u_ids[m * q + j]] = j
    for j in range(1, m):
        opt[v_ids[j - 1]] = j
        for q in range(m):
            opt[u_ids[(j - 1) * m + q]] = j
    opt[v_ids[m - 1]] = 0
    meta = _meta("arb_lb", m=m, eps=eps)
    meta.update(eps_prime=str(eps_prime), described_ne=ne, described_opt=opt)
    return GameInstance.build(jobs, [1] * m, lists, mode=mode, names=names, meta=meta)


def global_lb_eps_prime(m: int, eps: NumberLike) -> Fraction:
    """Parameter making the described equilibrium/optimum ratio exactly ``3 - 2/m - eps``.

    Solves ``(3 - 2/m - 2e'(1 - 1/m)) / (1 + (m-1) e') = 3 - 2/m - eps``.
    """
    eps = to_fraction(eps)
    return eps / ((m - 1) * (3 - eps))


def gen_global_lb(m: int, eps: NumberLike, mode: NumericMode = RATIONAL) -> GameInstance:
    """Global-list negative-rate game with ratio ``3 - 2/m - eps``.

    Same job set as :func:`gen_arbitrary_lb`; the shared list is
    ``(u_1..u_m, v_1..v_m, u_{m+1}.., a)``.
    """
    eps = _check_lb_params(m, eps)
    eps_prime = global_lb_eps_prime(m, eps)
    jobs, names = _lb_jobs(m, eps_prime, mode)
    n_u = m * (m - 1)
    u_ids = list(range(1, n_u + 1))
    v_ids = list(range(n_u + 1, n_u + 1 + m))
    order = u_ids[:m] + v_ids + u_ids[m:] + [0]
    ne = [0] * len(jobs)
    opt = [0] * len(jobs)
    for j in range(m):
        ne[u_ids[j]] = j
        ne[v_ids[j]] = j
        for q in range(1, m - 1):
            ne[u_ids[m * q + j]] = j
    for j in range(1, m):
        for q in range(m):
            opt[u_ids[(j - 1) * m + q]] = j
    for v in v_ids:
        opt[v] = 1
    meta = _meta("global_lb", m=m, eps=eps)
    meta.update(eps_prime=str(eps_prime), described_ne=ne, described_opt=opt)
    return GameInstance.build(jobs, [1] * m, order, mode=mode, names=names, meta=meta)


def sdr_lb_k_interval(b: NumberLike, a: NumberLike, B: NumberLike, eps: NumberLike = 0) -> tuple[float, float]:
    """Real interval of small-job counts per machine whose last completion lies in ``[B(1-eps), B]``."""
    b, a, B, eps = (float(to_fraction(x)) for x in (b, a, B, eps))
    if not (0 < a < 1) or not b / a > B:
        raise ParameterInfeasible("need 0 < a < 1 and b/a > B")
    denom = math.log(1 - a)
    lower = math.log(1 - a * B * (1 - eps) / b) / denom
    upper = math.log(1 - a * B / b) / denom
    return lower, upper


def gen_sdr_lb(
    b: NumberLike,
    a: NumberLike,
    B: NumberLike,
    tau: NumberLike,
    k: int,
    m: int,
    mode: NumericMode = RATIONAL,
    eps: NumberLike | None = None,
) -> GameInstance:
    """``k(m-1)`` small jobs ``max(b - a t, tau)`` then one big job ``max(B - a t, tau)``.

    ``k`` must not exceed the count at which the small-job chain passes ``B``;
    with ``eps`` it must also reach ``B(1 - eps)``.
    """
    if m < 2 or k < 1:
        raise ParameterInfeasible("need m >= 2 and k >= 1")
    lower, upper = sdr_lb_k_interval(b, a, B, 0 if eps is None else eps)
    if k > upper or (eps is not None and k < lower):
        raise ParameterInfeasible(f"k={k} outside the admissible interval [{lower:.3f}, {upper:.3f}]")
    if not 0 < to_fraction(tau) <= to_fraction(b):
        raise ParameterInfeasible("need 0 < tau <= b")
    small = k * (m - 1)
    jobs = [PF.negative(b, a, tau, mode) for _ in range(small)] + [PF.negative(B, a, tau, mode)]
    names = [f"u{i + 1}" for i in range(small)] + ["v"]
    opt = [1 + i // k for i in range(small)] + [0]
    meta = _meta("sdr_lb", b=b, a=a, B=B, tau=tau, k=k, m=m)
    meta["described_opt"] = opt
    return GameInstance.build(jobs, [1] * m, None, mode=mode, names=names, meta=meta)


def sdr_chain_completion(b: NumberLike, a: NumberLike, k: int) -> float:
    """Completion of the k-th identical small job started back to back at 0."""
    b, a = float(to_fraction(b)), float(to_fraction(a))
    return b / a * (1 - (1 - a) ** k)


# ------------------------------------------------------ matching reduction


@dataclass(frozen=True)
class ThreeDMInstance:
    """Element counts per dimension and triples of 0-based indices."""

    n: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        triples = tuple(tuple(int(v) for v in t) for t in self.triples)
        object.__setattr__(self, "triples", triples)
        if self.n < 1:
            raise InvalidInstance("need n >= 1")
        if len(triples) < self.n:
            raise InvalidInstance("need at least n triples")
        counts: dict[tuple[int, int], int] = {}
        for t in triples:
            if len(t) != 3:
                raise InvalidInstance(f"triple {t} does not have three entries")
            for dim, v in enumerate(t):
                if not 0 <= v < self.n:
                    raise InvalidInstance(f"element {v} out of range in triple {t}")
                counts[dim, v] = counts.get((dim, v), 0) + 1
                if counts[dim, v] > 3:
                    raise InvalidInstance(f"element {'xyz'[dim]}{v} occurs more than three times")


GAMMA = Fraction(32, 7)


def reduce_3dm(inst: ThreeDMInstance, mode: NumericMode = RATIONAL) -> GameInstance:
    """Game with a pure equilibrium exactly when ``inst`` has a perfect matching.

    Machines: 0, 1, 2 host the three-job gadget, then one machine per triple.
    Job ids: u, v, w, f, the D-dummies, the U-dummies, then x-, y- and
    z-element jobs.
    """
    if not isinstance(inst, ThreeDMInstance):
        raise InvalidInstance("expected a ThreeDMInstance")
    n, t = inst.n, len(inst.triples)
    gadget = _three_negative_jobs(mode)
    jobs = list(gadget) + [PF.fixed(GAMMA, mode)]
    names = ["u", "v", "w", "f"]
    d_ids = list(range(4, 4 + t - n))
    jobs += [PF.fixed(GAMMA + 1, mode) for _ in d_ids]
    names += [f"D{i}" for i in range(len(d_ids))]
    u_start = len(jobs)
    dummies = list(range(u_start, u_start + t + 3))
    jobs += [PF.fixed(GAMMA + 2, mode) for _ in dummies]
    names += [f"U{i}" for i in range(len(dummies))]
    base = len(jobs)
    xs = list(range(base, base + n))
    ys = list(range(base + n, base + 2 * n))
    zs = list(range(base + 2 * n, base + 3 * n))
    jobs += [PF.fixed(1, mode) for _ in range(3 * n)]
    names += [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)] + [f"z{i}" for i in range(n)]
    u, v, w, f = 0, 1, 2, 3
    elements = xs + ys + zs
    lists = [
        [v, u, w, f] + dummies + elements + d_ids,
        [w, u, v, f] + dummies + elements + d_ids,
        [f] + elements + d_ids + [u, v, w] + dummies,
    ]
    for x, y, z in inst.triples:
        own = [xs[x], ys[y], zs[z]]
        rest = [e for e in elements if e not in own]
        lists.append(d_ids + own + [f] + dummies + rest + [u, v, w])
    meta = _meta("reduce3dm", n=n, t=t)
    meta["triples"] = [list(tr) for tr in inst.triples]
    return GameInstance.build(jobs, [1] * (t + 3), lists, mode=mode, names=names, meta=meta)


def reduction_constraints(game: GameInstance) -> tuple[list[int], list[tuple[list[int], int]]]:
    """Search restrictions for a game built by :func:`reduce_3dm`.

    ``f`` only on the third machine, each D-dummy alone among D-dummies on a
    triplet machine, and at most one U-dummy per machine. Returned in the
    ``allowed`` / ``group_caps`` form taken by :func:`search_ne`.
    """
    if game.meta.get("family") != "reduce3dm":
        raise InvalidInstance("not a reduction game")
    n = int(game.meta["params"]["n"])
    t = int(game.meta["params"]["t"])
    m = game.m
    every = (1 << m) - 1
    triplet = every & ~0b111
    d_ids = list(range(4, 4 + t - n))
    u_ids = list(range(4 + t - n, 4 + t - n + t + 3))
    allowed = [every] * game.n
    allowed[3] = 1 << 2
    for d in d_ids:
        allowed[d] = triplet
    return allowed, [(d_ids, 1), (u_ids, 1)]


def reduction_has_ne(game: GameInstance, *, pruned: bool = True, node_budget: int | None = None) -> bool:
    """Equilibrium existence for a reduction game, optionally under :func:`reduction_constraints`."""
    if not pruned:
        return bool(search_ne(game, first_only=True, break_symmetry=True, node_budget=node_budget, float_bounds=True))
    allowed, caps = reduction_constraints(game)
    found = search_ne(
        game,
        first_only=True,
        break_symmetry=True,
        node_budget=node_budget,
        allowed=allowed,
        group_caps=caps,
        float_bounds=True,
    )
    return bool(found)


def solve_3dm_bruteforce(inst: ThreeDMInstance, node_budget: int = 10**6) -> bool:
    """Exhaustive search for ``n`` triples covering every element exactly once."""
    by_x: dict[int, list[tuple[int, int, int]]] = {}
    for tr in inst.triples:
        by_x.setdefault(tr[0], []).append(tr)
    used_y: set[int] = set()
    used_z: set[int] = set()
    nodes = 0

    def extend(x: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"matching search exceeded {node_budget} nodes")
        if x == inst.n:
            return True
        for _, y, z in by_x.get(x, ()):
            if y in used_y or z in used_z:
                continue
            used_y.add(y)
            used_z.add(z)
            if extend(x + 1):
                return True
            used_y.discard(y)
            used_z.discard(z)
        return False

    return extend(0)


def sample_3dm(n: int, t: int, seed: int | random.Random) -> ThreeDMInstance:
    """Random instance with ``t`` distinct triples, each element used at most three times."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if t < n or t > 3 * n:
        raise InfeasibleSpec("need n <= t <= 3n")
    for _ in range(1000):
        used = [[0] * n for _ in range(3)]
        chosen: list[tuple[int, int, int]] = []
        for _ in range(50 * t):
            if len(chosen) == t:
                break
            tr = tuple(rng.randrange(n) for _ in range(3))
            if tr in chosen or any(used[d][tr[d]] >= 3 for d in range(3)):
                continue
            chosen.append(tr)
            for d in range(3):
                used[d][tr[d]] += 1
        if len(chosen) == t:
            return ThreeDMInstance(n, tuple(chosen))
    raise InfeasibleSpec(f"could not sample {t} triples over {n} elements")


def matching_examples() -> tuple[ThreeDMInstance, ThreeDMInstance]:
    """The two small examples: one with a perfect matching, one without."""
    yes = ThreeDMInstance(2, ((0, 0, 0), (1, 1, 1), (0, 1, 1)))
    no = ThreeDMInstance(2, ((0, 0, 0), (1, 1, 0), (0, 1, 1)))
    return yes, no


# --------------------------------------------------------- random sampling

CLASS_ALIASES: dict[str, tuple[str, ...]] = {
    "any": (),
    "sym": ("symmetric",),
    "two": ("two_machines",),
    "two_plus": ("two_machines", "all_positive"),
    "two_da": ("two_machines", "delay_averse"),
    "two_neg_da": ("two_machines", "all_negative", "delay_averse"),
    "P_da": ("identical_speeds", "delay_averse"),
    "P_plus": ("identical_speeds", "all_positive"),
    "P_neg_da": ("identical_speeds", "all_negative", "delay_averse"),
    "global": ("global_list",),
    "global_da": ("global_list", "delay_averse"),
    "global_neg_da": ("global_list", "identical_speeds", "all_negative", "delay_averse"),
    "sdr": ("identical_speeds", "all_negative", "delay_averse"),
    "lbdr": ("identical_speeds", "all_negative", "delay_averse"),
    "sbpt": ("identical_speeds", "all_positive", "uniform_rate"),
}


def resolve_class(spec: GameClass | str | Iterable[str]) -> GameClass:
    if isinstance(spec, GameClass):
        return spec
    if isinstance(spec, str):
        if spec in CLASS_ALIASES:
            return GameClass.of(*CLASS_ALIASES[spec])
        try:
            return GameClass.of(*[s for s in spec.split("+") if s])
        except ValueError as exc:
            raise InfeasibleSpec(f"unknown class {spec!r}") from exc
    try:
        return GameClass.of(*spec)
    except ValueError as exc:
        raise InfeasibleSpec(str(exc)) from exc


def _grid(rng: random.Random, lo: Fraction, hi: Fraction, den: int) -> Fraction:
    """Uniform draw from the multiples of ``1/den`` in ``[lo, hi]``."""
    a, b = math.ceil(lo * den), math.floor(hi * den)
    if a > b:
        raise InfeasibleSpec(f"empty range [{lo}, {hi}] at resolution 1/{den}")
    return Fraction(rng.randint(a, b), den)


def sample_random(
    class_spec: GameClass | str | Iterable[str],
    n: int,
    m: int,
    seed: int,
    *,
    b_max: NumberLike = 10,
    rate_max: NumberLike = 1,
    den: int = 4,
    mode: NumericMode = RATIONAL,
) -> GameInstance:
    """Reproducible random instance whose class includes ``class_spec``.

    Numbers are multiples of ``1/den``: basic times in ``[1/den, b_max]``,
    rates in ``[0, rate_max]`` (capped by the fastest speed for negative
    jobs when delay aversion is requested, up to twice it otherwise) and
    thresholds in ``(0, b]``. Speeds are 1 on identical machines, else
    machine 0 has speed 1 and the rest lie in ``[1/den, 1]``.
    """
    spec = resolve_class(class_spec)
    if n < 1 or m < 1:
        raise InfeasibleSpec("need n >= 1 and m >= 1")
    if spec.two_machines and m != 2:
        raise InfeasibleSpec("two-machine class needs m = 2")
    rng = random.Random(seed)
    b_max = to_fraction(b_max)
    rate_max = to_fraction(rate_max)
    step = Fraction(1, den)
    if spec.identical_speeds or m == 1:
        speeds = [Fraction(1)] * m
    else:
        speeds = [Fraction(1)] + [_grid(rng, step, Fraction(1), den) for _ in range(m - 1)]
    s_max = max(speeds)

    def draw_job(sign: int | None, rate: Fraction | None) -> ProcessingFunction:
        if sign is None:
            sign = rng.choice((1, -1))
        b = _grid(rng, step, b_max, den)
        if sign == 1:
            a = rate if rate is not None else _grid(rng, Fraction(0), rate_max, den)
            return PF(b, a, 1, None)
        hi = min(rate_max, s_max) if spec.delay_averse else max(rate_max, 2 * s_max)
        a = rate if rate is not None else _grid(rng, Fraction(0), hi, den)
        tau = _grid(rng, step, b, den)
        return PF(b, a, -1, tau)

    if spec.all_positive and spec.all_negative:
        signs: list[int | None] = [0] * n
    elif spec.all_positive:
        signs = [1] * n
    elif spec.all_negative:
        signs = [-1] * n
    else:
        signs = [None] * n

    shared_rate = None
    if spec.uniform_rate:
        if spec.all_positive and not spec.all_negative:
            shared_rate = _grid(rng, step, max(rate_max, step), den)
        elif spec.delay_averse:
            shared_rate = _grid(rng, Fraction(0), min(rate_max, s_max), den)
        else:
            shared_rate = _grid(rng, Fraction(0), rate_max, den)

    def job_for(sign: int | None) -> ProcessingFunction:
        if sign == 0:
            return PF(_grid(rng, step, b_max, den), Fraction(0), 1, None)
        return draw_job(sign, shared_rate)

    if spec.symmetric:
        proto = job_for(signs[0])
        jobs = [proto] * n
    else:
        jobs = [job_for(s) for s in signs]

    if spec.global_list:
        order = list(range(n))
        rng.shuffle(order)
        lists: Sequence = order
    else:
        lists = []
        for _ in range(m):
            order = list(range(n))
            rng.shuffle(order)
            lists.append(order)
    game = GameInstance.build(
        jobs, speeds, lists, mode=mode, meta=_meta("random", cls="+".join(sorted(spec.flags())), n=n, m=m, seed=seed)
    )
    if not classify(game).includes(spec):
        raise InfeasibleSpec(f"sampled instance misses flags {sorted(spec.flags() - classify(game).flags())}")
    return game
