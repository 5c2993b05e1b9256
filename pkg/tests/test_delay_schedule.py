import numpy as np
import pytest

from gnesim.delay_schedule import (
    build_calendar,
    calendar_stats,
    constant_delay_schedule,
    schedule_from_spec,
    type1_schedule,
    type2_schedule,
    type3_schedule,
)
from gnesim.errors import ConfigurationError, FeedbackStarvationError, ValidationError
from gnesim.topology import ClusterLayout

LAYOUT = ClusterLayout((3, 3, 1))
SINGLE = ClusterLayout((1,))


def test_zero_delay_delivers_current_round():
    cal = build_calendar(constant_delay_schedule(0), SINGLE, 10)
    for t in range(1, 11):
        assert cal.at(0, t) == (t,)


def test_unit_delay_equals_zero_delay():
    a = build_calendar(constant_delay_schedule(0), SINGLE, 20)
    b = build_calendar(constant_delay_schedule(1), SINGLE, 20)
    assert a.sets == b.sets


def test_constant_delay_landing_round():
    # Delay 10: round s feedback becomes usable at round s + 9.
    cal = build_calendar(constant_delay_schedule(10), SINGLE, 40)
    for t in range(1, 10):
        assert cal.at(0, t) == ()
    for s in range(1, 31):
        assert cal.at(0, s + 9) == (s,)


def test_constant_delay_past_horizon_starves():
    with pytest.raises(FeedbackStarvationError):
        build_calendar(constant_delay_schedule(25), SINGLE, 20)


def test_type1_batches():
    sched = type1_schedule(30)
    assert sched.feedback_set(0, 0, 31) == tuple(range(1, 31))
    assert sched.feedback_set(0, 0, 30) == ()
    assert sched.feedback_set(0, 0, 1) == ()
    cal = build_calendar(sched, SINGLE, 200)
    delivered = sorted(s for t in range(1, 201) for s in cal.at(0, t))
    assert delivered == list(range(1, 181))  # tail rounds 181..200 never arrive


def test_type1_short_horizon_drops_tail():
    cal = build_calendar(type1_schedule(30), SINGLE, 100)
    delivered = sorted(s for t in range(1, 101) for s in cal.at(0, t))
    assert delivered == list(range(1, 91))


def test_type2_batches():
    sched = type2_schedule(30)
    assert sched.feedback_set(0, 0, 31) == tuple(range(1, 31))
    assert sched.feedback_set(0, 0, 91) == tuple(range(31, 91))
    assert sched.feedback_set(0, 0, 61) == ()
    assert sched.feedback_set(0, 0, 90) == ()
    # Third batch: 6*30 + 1 = 181 carrying the 90 preceding rounds.
    assert sched.feedback_set(0, 0, 181) == tuple(range(91, 181))


def test_type2_delay_sum_grows_superlinearly():
    sched = type2_schedule(30)
    horizons = [2000, 4000, 8000]
    sums = []
    for h in horizons:
        stats = calendar_stats(build_calendar(sched, SINGLE, h))
        sums.append(stats.delay_sum[0])
    slope = np.polyfit(np.log(horizons), np.log(sums), 1)[0]
    assert 1.3 <= slope <= 1.7  # quadratically spaced batches: ~T^1.5


def test_type3_per_agent_sets():
    sched = type3_schedule()
    # First agent: window parameter 2*1 + 1 = 3.
    assert sched.feedback_set(0, 0, 30) == ()
    assert sched.feedback_set(0, 0, 31) == (1, 31)
    assert sched.feedback_set(0, 0, 60) == (30, 60)
    assert sched.feedback_set(0, 0, 61) == (61,)
    # Last agent: window parameter 2*3 + 1 = 7.
    assert sched.feedback_set(2, 0, 70) == ()
    assert sched.feedback_set(2, 0, 71) == (1, 71)
    assert sched.feedback_set(2, 0, 141) == (141,)


def test_type3_sets_disjoint_over_horizon():
    cal = build_calendar(type3_schedule(), LAYOUT, 300)
    for agent in range(LAYOUT.n):
        seen = set()
        for t in range(1, 301):
            batch = cal.at(agent, t)
            assert seen.isdisjoint(batch)
            seen.update(batch)


@pytest.mark.parametrize(
    "schedule",
    [
        constant_delay_schedule(0),
        constant_delay_schedule(17),
        type1_schedule(30),
        type2_schedule(30),
        type3_schedule(),
    ],
    ids=["none", "constant17", "type1", "type2", "type3"],
)
def test_calendar_invariants_exhaustive(schedule):
    horizon = 1000
    cal = build_calendar(schedule, LAYOUT, horizon)
    for agent in range(LAYOUT.n):
        seen = set()
        for t in range(1, horizon + 1):
            batch = cal.at(agent, t)
            assert all(1 <= s <= t for s in batch)
            assert seen.isdisjoint(batch)
            seen.update(batch)
        # Conservation: delivered plus still-missing-at-the-end covers every round.
        missing_at_end = horizon - len(seen)
        stats = calendar_stats(cal)
        assert len(seen) + missing_at_end == horizon
        assert stats.miss_max[agent] >= missing_at_end


def test_delay_recovery_from_calendar():
    t0 = 7
    cal = build_calendar(constant_delay_schedule(t0), SINGLE, 50)
    for t in range(1, 51):
        for s in cal.at(0, t):
            assert t + 1 - s == t0


def test_stats_delay_free():
    horizon = 120
    stats = calendar_stats(build_calendar(constant_delay_schedule(0), LAYOUT, horizon))
    assert stats.max_batch == 1
    assert stats.miss_max == (0,) * 7
    assert stats.delay_sum == (horizon,) * 7


def test_stats_constant_delay():
    horizon, t0 = 200, 12
    stats = calendar_stats(build_calendar(constant_delay_schedule(t0), LAYOUT, horizon))
    assert stats.max_batch == 1
    assert stats.miss_max == (t0 - 1,) * 7
    assert stats.delay_sum == (t0 * (horizon - t0 + 1),) * 7


def test_stats_type1_batch_bound():
    stats = calendar_stats(build_calendar(type1_schedule(30), SINGLE, 200))
    assert stats.max_batch == 30


def test_set_given_validation():
    class BadSchedule(type(type1_schedule(2))):
        def feedback_set(self, cluster, member, t):
            return (t, t)  # duplicate delivery

    with pytest.raises(ValidationError):
        build_calendar(BadSchedule(2), SINGLE, 5)


def test_schedule_from_spec():
    assert isinstance(schedule_from_spec("none"), type(constant_delay_schedule(0)))
    assert schedule_from_spec("constant", t0=5).t0 == 5
    assert schedule_from_spec("type1", t1=4).t1 == 4
    assert schedule_from_spec("type2", t2=9).t2 == 9
    schedule_from_spec("type3")
    with pytest.raises(ConfigurationError):
        schedule_from_spec("weekly")
    with pytest.raises(ConfigurationError):
        constant_delay_schedule(-1)
    with pytest.raises(ConfigurationError):
        type1_schedule(0)
