"""Hypothesis strategies for small games."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from tdsched import GameInstance, ProcessingFunction


def quarters(lo: int, hi: int) -> st.SearchStrategy[Fraction]:
    """Multiples of 1/4 in ``[lo/4, hi/4]``."""
    return st.integers(lo, hi).map(lambda k: Fraction(k, 4))


@st.composite
def laws(draw, sign: int | None = None, max_rate: Fraction = Fraction(2)) -> ProcessingFunction:
    sign = draw(st.sampled_from((1, -1))) if sign is None else sign
    b = draw(quarters(1, 40))
    a = draw(quarters(0, int(max_rate * 4)))
    if sign == 1:
        return ProcessingFunction(b, a, 1, None)
    tau = draw(quarters(1, int(b * 4)))
    return ProcessingFunction(b, a, -1, tau)


@st.composite
def games(
    draw,
    n=st.integers(1, 5),
    m=st.integers(1, 3),
    sign: int | None = None,
    identical: bool = False,
    global_list: bool = False,
    max_rate: Fraction = Fraction(2),
) -> GameInstance:
    n, m = draw(n), draw(m)
    jobs = [draw(laws(sign, max_rate)) for _ in range(n)]
    if identical:
        speeds = [Fraction(1)] * m
    else:
        speeds = [Fraction(1)] + [draw(quarters(1, 4)) for _ in range(m - 1)]
    perm = st.permutations(list(range(n)))
    lists = draw(perm) if global_list else [draw(perm) for _ in range(m)]
    return GameInstance.build(jobs, speeds, lists)


@st.composite
def game_and_profile(draw, **kwargs):
    game = draw(games(**kwargs))
    profile = draw(st.lists(st.integers(0, game.m - 1), min_size=game.n, max_size=game.n))
    return game, tuple(profile)
