"""The averaging synchronizer, its corner-point oracle and the shift twin."""

from fractions import Fraction
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distlab.clocksync import (
    ClockModel,
    constant_delays,
    corner_count,
    corner_delays,
    corner_skews,
    ordered_pairs,
    random_delays,
    shift_witness,
    skew_bound,
    sync_run,
)
from distlab.errors import InvalidModel, TooLarge


def model(n, delta, eps, offsets, delays, tau0=0):
    return ClockModel(n=n, delta=delta, eps=eps, offsets=offsets,
                      delays=delays, tau0=tau0)


def test_zero_uncertainty_synchronizes_exactly():
    m = model(3, 2, 0, (10, -4, 0.5), constant_delays(3, 2))
    assert sync_run(m).skew == 0.0


def test_midpoint_delays_cancel_any_offsets():
    m = model(4, 1, 6, (100, -3, 7, 0), constant_delays(4, 4))
    run = sync_run(m)
    assert run.skew == 0.0
    assert len(set(run.logical_offsets)) == 1


def test_hand_checked_views_and_adjustments():
    m = model(2, 1, 2, (5, 9), {(0, 1): 2, (1, 0): 3}, tau0=100)
    run = sync_run(m)
    # p1 hears p0 at local time 100 + 9 - 5 + 2; p0 hears p1 at 100 + 5 - 9 + 3
    assert run.views == (((1, 99.0),), ((0, 106.0),))
    # midpoint estimate of the sender's clock is 100 + 1 + 1 = 102
    assert run.adjustments == (1.5, -2.0)
    assert run.logical_offsets == (6.5, 7.0)
    assert run.skew == 0.5


def test_two_processes_worst_corner_is_half_eps():
    skews = dict(corner_skews(2, delta=1, eps=1))
    assert len(skews) == 4
    assert max(skews.values()) == skew_bound(2, 1) == 0.5
    # both lopsided corners attain it, the symmetric ones attain nothing
    assert skews[0] == skews[3] == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_corner_bound_is_tight(n):
    bound = skew_bound(n, 1)
    skews = [s for _, s in corner_skews(n, delta=1, eps=1)]
    assert len(skews) == corner_count(n)
    assert max(skews) <= bound + 1e-9
    assert max(skews) >= bound - 1e-9


def test_monte_carlo_never_beats_the_corners():
    rng = Random(20260814)
    bound = skew_bound(3, 1)
    worst = 0.0
    for _ in range(10_000):
        m = model(3, 1, 1, (0, 0, 0), random_delays(3, 1, 1, rng))
        worst = max(worst, sync_run(m).skew)
    assert worst <= bound + 1e-9


def test_corner_enumeration_refuses_large_n():
    with pytest.raises(TooLarge):
        corner_skews(5, delta=1, eps=1)


def test_delay_validation():
    with pytest.raises(InvalidModel):
        sync_run(model(2, 1, 1, (0, 0), {(0, 1): 0.5, (1, 0): 1}))
    with pytest.raises(InvalidModel):
        sync_run(model(2, 1, 1, (0, 0), {(0, 1): 2.5, (1, 0): 1}))
    with pytest.raises(InvalidModel):
        sync_run(model(2, 1, 1, (0, 0), {(0, 1): 1}))
    with pytest.raises(InvalidModel):
        sync_run(model(2, 1, 1, (0, 0), None))
    with pytest.raises(InvalidModel):
        sync_run(model(2, 1, 1, (0, 0, 0), constant_delays(2, 1)))


def test_corner_delays_bit_layout():
    d = corner_delays(2, 0b01, delta=3, eps=2)
    assert d == {(0, 1): 5, (1, 0): 3}
    with pytest.raises(InvalidModel):
        corner_delays(2, 4, delta=3, eps=2)


def test_witness_two_processes_is_the_swapped_pair():
    w = shift_witness(ClockModel(n=2, delta=1, eps=1, offsets=(0, 0)))
    assert w.model_a.delays == {(0, 1): 1, (1, 0): 2}
    assert w.model_b.delays == {(0, 1): 2, (1, 0): 1}
    assert w.model_b.offsets[0] == w.model_a.offsets[0] + 1
    assert w.run_a.views == w.run_b.views
    assert w.run_a.adjustments == w.run_b.adjustments
    assert w.skew == 0.5


def test_witness_zero_uncertainty():
    w = shift_witness(ClockModel(n=2, delta=3, eps=0, offsets=(1, 2)))
    assert w.skew == 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8])
def test_witness_attains_the_bound(n):
    w = shift_witness(ClockModel(n=n, delta=1, eps=1, offsets=(0,) * n))
    assert w.skew >= skew_bound(n, 1) - 1e-9
    assert w.run_a.views == w.run_b.views


def test_witness_needs_two_processes():
    with pytest.raises(InvalidModel):
        shift_witness(ClockModel(n=1, delta=1, eps=1, offsets=(0,)))


def test_witness_delays_stay_inside_the_box():
    for w in (shift_witness(ClockModel(n=4, delta=2, eps=3,
                                       offsets=(1, -1, 0, 9))),):
        for d in list(w.model_a.delays.values()) + list(w.model_b.delays.values()):
            assert 2 <= d <= 5


offsets_st = st.lists(
    st.fractions(min_value=-50, max_value=50, max_denominator=64),
    min_size=3, max_size=3)
fills_st = st.lists(
    st.fractions(min_value=0, max_value=1, max_denominator=32),
    min_size=6, max_size=6)


@settings(deadline=None, max_examples=60)
@given(offsets=offsets_st, fills=fills_st,
       shift=st.fractions(min_value=-100, max_value=100, max_denominator=64))
def test_translation_invariance(offsets, fills, shift):
    delta, eps = Fraction(1), Fraction(2)
    delays = {pair: delta + t * eps
              for pair, t in zip(ordered_pairs(3), fills)}
    base = sync_run(model(3, delta, eps, tuple(offsets), delays))
    moved = sync_run(model(3, delta, eps,
                           tuple(o + shift for o in offsets), delays))
    assert moved.skew == base.skew
    assert moved.adjustments == base.adjustments


@settings(deadline=None, max_examples=60)
@given(fills=fills_st)
def test_random_rational_delays_respect_the_bound(fills):
    delta, eps = Fraction(1), Fraction(2)
    delays = {pair: delta + t * eps
              for pair, t in zip(ordered_pairs(3), fills)}
    run = sync_run(model(3, delta, eps, (0, 0, 0), delays))
    assert run.skew <= skew_bound(3, 2) + 1e-9
