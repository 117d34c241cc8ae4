from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import game_and_profile, quarters
from tdsched import (
    GameInstance,
    MalformedProfile,
    ProcessingFunction,
    build_schedule,
    completion_time,
    gen_noNE2,
    gen_noNE3,
    total_processing,
)

PF = ProcessingFunction


def test_two_job_game_on_first_machine():
    sched = build_schedule(gen_noNE2(), (0, 0))
    assert sched.completion == (24, 27)
    assert sched.sequences == ((0, 1), ())
    assert total_processing(sched) == 27


def test_single_job_on_slow_machine():
    game = GameInstance.build([PF.positive(3, 1)], [F(1, 3)], None)
    sched = build_schedule(game, (0,))
    assert sched.start == (0,) and sched.makespan == 9


def test_three_job_game_all_on_first_machine():
    sched = build_schedule(gen_noNE3(), (0, 0, 0))
    assert sched.completion == (F("4.8"), F(4), F(5))


def test_fixed_job_total():
    game = GameInstance.build([PF.fixed(5)], [1, 1], None)
    sched = build_schedule(game, (1,))
    assert total_processing(sched) == 5
    assert sched.loads == (0, 5)


@pytest.mark.parametrize("profile", [(0,), (0, 2), (0, -1), (0, 0, 0)])
def test_malformed_profiles(profile):
    with pytest.raises(MalformedProfile):
        build_schedule(gen_noNE2(), profile)


@given(game_and_profile())
def test_schedule_invariants(case):
    game, profile = case
    sched = build_schedule(game, profile)
    for j, seq in enumerate(sched.sequences):
        rank = game.rank[j]
        assert list(seq) == sorted(seq, key=rank.__getitem__)
        t = F(0)
        for job in seq:
            assert sched.start[job] == t
            t = completion_time(game.jobs[job], t, game.speeds[j])
            assert sched.completion[job] == t
        assert sched.loads[j] == t
    assert sched.makespan == max(sched.completion)
    weighted = sum((load * s for load, s in zip(sched.loads, game.speeds)), F(0))
    assert total_processing(sched) == weighted


@given(game_and_profile(), st.data())
def test_other_machines_unaffected_by_a_move(case, data):
    game, profile = case
    if game.m < 2:
        return
    job = data.draw(st.integers(0, game.n - 1))
    target = data.draw(st.integers(0, game.m - 1))
    moved = list(profile)
    source = profile[job]
    moved[job] = target
    before, after = build_schedule(game, profile), build_schedule(game, moved)
    for i in range(game.n):
        if profile[i] not in (source, target):
            assert before.completion[i] == after.completion[i]


@given(st.integers(1, 6), quarters(1, 20), quarters(1, 8))
def test_symmetric_positive_closed_form(k, b, a):
    game = GameInstance.build([PF.positive(b, a)] * k, [1], None)
    assert build_schedule(game, (0,) * k).makespan == b * ((1 + a) ** k - 1) / a
