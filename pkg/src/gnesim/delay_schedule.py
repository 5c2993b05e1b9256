"""Feedback-delay processes and the per-agent delivery calendars they induce.

Round s feedback carrying delay tau arrives during the interval
(s + tau - 1, s + tau], i.e. it becomes usable in the update of round
t = s + tau - 1.  A calendar stores, for every agent and round t, the set of
originating rounds whose feedback becomes available at t.  Feedback whose
arrival falls beyond the horizon is never delivered.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from .errors import ConfigurationError, FeedbackStarvationError, ValidationError
from .topology import ClusterLayout


class DelaySchedule(ABC):
    """Either delay-given (provides tau) or set-given (provides the sets directly)."""


class DelayGivenSchedule(DelaySchedule):
    @abstractmethod
    def tau(self, cluster: int, member: int, t: int) -> int:
        """Feedback delay (>= 1) of round-t information for one agent."""


class SetGivenSchedule(DelaySchedule):
    @abstractmethod
    def feedback_set(self, cluster: int, member: int, t: int) -> tuple:
        """Rounds whose feedback becomes available to the agent at round t."""


class ConstantDelaySchedule(DelayGivenSchedule):
    """All agents share one constant delay; t0 = 0 means the delay-free case."""

    def __init__(self, t0: int):
        if t0 < 0:
            raise ConfigurationError("t0 must be nonnegative")
        self.t0 = int(t0)
        self._tau = max(self.t0, 1)

    def tau(self, cluster, member, t):
        return self._tau


class Type1Schedule(SetGivenSchedule):
    """Feedback for a whole historical window arrives on regular intervals.

    Nothing is delivered except at rounds t with t % t1 == 1 (t != 1), where
    the previous t1 rounds arrive as one batch.
    """

    def __init__(self, t1: int):
        if t1 < 1:
            raise ConfigurationError("t1 must be >= 1")
        self.t1 = int(t1)

    def feedback_set(self, cluster, member, t):
        if t % self.t1 == 1 and t != 1:
            return tuple(range(t - self.t1, t))
        return ()


class Type2Schedule(SetGivenSchedule):
    """Batch deliveries whose spacing grows linearly.

    Batch b arrives at t = t2 * b(b+1)/2 + 1 and carries the t2*b rounds
    preceding it.
    """

    def __init__(self, t2: int):
        if t2 < 1:
            raise ConfigurationError("t2 must be >= 1")
        self.t2 = int(t2)

    def _batch_index(self, t: int):
        if t <= 1 or (t - 1) % self.t2 != 0:
            return None
        # (t - 1)/t2 must be a triangular number b(b+1)/2.
        tri = (t - 1) // self.t2
        b = int((2 * tri) ** 0.5)
        for cand in (b - 1, b, b + 1):
            if cand >= 1 and cand * (cand + 1) == 2 * tri:
                return cand
        return None

    def feedback_set(self, cluster, member, t):
        b = self._batch_index(t)
        if b is None:
            return ()
        span = self.t2 * b
        return tuple(range(t - span, t))


class Type3Schedule(SetGivenSchedule):
    """Heterogeneous per-agent delays.

    With w = 2(cluster+1) + (member+1): silence through round 10w, then pairs
    {t - 10w, t} through round 20w, then current-round feedback only.
    """

    def feedback_set(self, cluster, member, t):
        w = 2 * (cluster + 1) + (member + 1)
        if t <= 10 * w:
            return ()
        if t <= 20 * w:
            return (t - 10 * w, t)
        return (t,)


def constant_delay_schedule(t0: int) -> ConstantDelaySchedule:
    return ConstantDelaySchedule(t0)


def type1_schedule(t1: int) -> Type1Schedule:
    return Type1Schedule(t1)


def type2_schedule(t2: int) -> Type2Schedule:
    return Type2Schedule(t2)


def type3_schedule() -> Type3Schedule:
    return Type3Schedule()


@dataclass(frozen=True)
class FeedbackCalendar:
    """Per-agent arrays over rounds 1..horizon of feedback-timestamp sets.

    ``sets[a][t-1]`` is a sorted tuple of originating rounds available to the
    flat-indexed agent ``a`` during round t.  Sets of one agent are pairwise
    disjoint across rounds and contained in [1, t].  Immutable after build.
    """

    layout: ClusterLayout
    horizon: int
    sets: tuple

    def at(self, agent: int, t: int) -> tuple:
        return self.sets[agent][t - 1]

    def agent_sets(self, agent: int) -> tuple:
        return self.sets[agent]


def build_calendar(schedule: DelaySchedule, layout: ClusterLayout, horizon: int) -> FeedbackCalendar:
    """Precompute the delivery calendar for a whole horizon.

    For delay-given schedules round s lands at t = s + tau(s) - 1; arrivals
    past the horizon are dropped.  Set-given schedules are copied verbatim and
    validated.  Every agent must receive at least one delivery within the
    horizon, otherwise the run could never use any feedback.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    all_sets = []
    for cluster, member in layout.agents():
        if isinstance(schedule, DelayGivenSchedule):
            per_round = [[] for _ in range(horizon)]
            for s in range(1, horizon + 1):
                tau = int(schedule.tau(cluster, member, s))
                if tau < 1:
                    raise ValidationError(f"delay must be >= 1, got {tau} at round {s}")
                arrival = s + tau - 1
                if arrival <= horizon:
                    per_round[arrival - 1].append(s)
            agent_sets = tuple(tuple(sorted(v)) for v in per_round)
        elif isinstance(schedule, SetGivenSchedule):
            agent_sets = tuple(
                tuple(sorted(int(s) for s in schedule.feedback_set(cluster, member, t)))
                for t in range(1, horizon + 1)
            )
        else:
            raise ConfigurationError(f"unknown schedule type {type(schedule).__name__}")

        seen = set()
        for t, batch in enumerate(agent_sets, start=1):
            for s in batch:
                if not 1 <= s <= t:
                    raise ValidationError(
                        f"agent ({cluster},{member}): round {s} outside [1,{t}] at round {t}"
                    )
                if s in seen:
                    raise ValidationError(
                        f"agent ({cluster},{member}): round {s} delivered twice"
                    )
                seen.add(s)
        if not seen:
            raise FeedbackStarvationError(
                f"agent ({cluster},{member}) never receives feedback within horizon {horizon}"
            )
        all_sets.append(agent_sets)
    return FeedbackCalendar(layout=layout, horizon=horizon, sets=tuple(all_sets))


@dataclass(frozen=True)
class CalendarStats:
    """Batch/miss/delay statistics of a calendar.

    max_batch is the largest delivery-set size over all agents and rounds;
    miss_max[a] the largest number of not-yet-delivered rounds any prefix
    [1, t] leaves for agent a; delay_sum[a] the summed delays of everything
    agent a eventually receives.
    """

    max_batch: int
    miss_max: tuple
    delay_sum: tuple

    def __post_init__(self):
        if self.max_batch < 0 or min(self.miss_max) < 0 or min(self.delay_sum) < 0:
            raise ValidationError("calendar statistics must be nonnegative")


def calendar_stats(calendar: FeedbackCalendar) -> CalendarStats:
    """Compute CalendarStats; delays are recovered as (arrival round + 1 - origin)."""
    max_batch = 0
    miss_max = []
    delay_sum = []
    for agent in range(calendar.layout.n):
        delivered = 0
        worst_miss = 0
        total_delay = 0
        for t, batch in enumerate(calendar.agent_sets(agent), start=1):
            max_batch = max(max_batch, len(batch))
            delivered += len(batch)
            worst_miss = max(worst_miss, t - delivered)
            total_delay += sum(t + 1 - s for s in batch)
        miss_max.append(worst_miss)
        delay_sum.append(total_delay)
    return CalendarStats(
        max_batch=max_batch, miss_max=tuple(miss_max), delay_sum=tuple(delay_sum)
    )


DELAY_KINDS = ("none", "constant", "type1", "type2", "type3")


def schedule_from_spec(kind: str, t0: int = 0, t1: int = 30, t2: int = 30) -> DelaySchedule:
    """Construct a schedule from config-style keys."""
    if kind == "none":
        return constant_delay_schedule(0)
    if kind == "constant":
        return constant_delay_schedule(t0)
    if kind == "type1":
        return type1_schedule(t1)
    if kind == "type2":
        return type2_schedule(t2)
    if kind == "type3":
        return type3_schedule()
    raise ConfigurationError(f"unknown delay kind {kind!r}; expected one of {DELAY_KINDS}")
