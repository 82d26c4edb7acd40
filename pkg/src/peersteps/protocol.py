"""Study state machine: enrollment, per-day arm scheduling, daily sessions.

Days are indexed by completed data days, not calendar days. Days 1..9 expose
every participant to each arm exactly three times in a random order; from
day 10 the experimental group's arm comes from the bandit while the control
group keeps drawing uniformly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from random import Random

from .bandit import (
    ARMS,
    Arm,
    ArmStatsTable,
    Reward,
    RewardWeights,
    compute_reward,
    select_arm_epsilon_greedy,
    select_arm_ucb,
    select_arm_uniform,
    update_stats,
)
from .errors import ConflictError, DomainError, SequencingError, ValidationError
from .profiles import ProfileCard

KNOWN_GENDERS = ("female", "male", "nonbinary", "other")


class Condition(enum.Enum):
    CONTROL = "control"
    EXPERIMENTAL = "experimental"


@dataclass(frozen=True)
class Ucb1Strategy:
    # 0.5 keeps enough exploration to cover all arms during the short
    # adaptive window while committing clearly to the learned preference;
    # at 1.0 the bonus term swamps the reward gaps for a 21-day horizon.
    exploration_c: float = 0.5


@dataclass(frozen=True)
class EpsilonGreedyStrategy:
    epsilon: float = 0.1


Strategy = Ucb1Strategy | EpsilonGreedyStrategy


@dataclass(frozen=True)
class StudyConfig:
    baseline_days: int = 9
    total_days: int = 21
    non_wear_threshold: int = 100
    default_baseline_steps: int = 6000
    weights: RewardWeights = RewardWeights()
    strategy: Strategy = Ucb1Strategy()
    likert_min: int = 1
    likert_max: int = 5
    seed: int = 0
    # When set, baseline-day rewards are recorded on sessions but do not
    # update arm statistics, so the adaptive phase starts uninformed.
    cold_start: bool = False

    def __post_init__(self) -> None:
        if self.baseline_days >= self.total_days:
            raise DomainError("baseline_days must be smaller than total_days")
        if self.non_wear_threshold < 1:
            raise DomainError("non_wear_threshold must be at least 1")
        if self.likert_min >= self.likert_max:
            raise DomainError("likert_min must be below likert_max")


@dataclass
class ParticipantModel:
    participant_id: str
    external_id: str
    gender: str
    condition: Condition
    baseline_schedule: list[Arm]
    enrolled_on: Date
    arm_stats: ArmStatsTable = field(default_factory=ArmStatsTable)
    baseline_mean_steps: float | None = None
    baseline_wear_steps: list[int] = field(default_factory=list)
    day_counter: int = 0


class SessionState(enum.Enum):
    STARTED = "started"
    PRE_RATED = "pre_rated"
    CARDS_ISSUED = "cards_issued"
    SELECTED = "selected"
    POST_RATED = "post_rated"
    CLOSED = "closed"
    FINALIZED = "finalized"


# --- session events -------------------------------------------------------


@dataclass(frozen=True)
class PreMotivation:
    value: int


@dataclass(frozen=True)
class IssueCards:
    cards: tuple[ProfileCard, ...]
    reference_steps: int


@dataclass(frozen=True)
class Preview:
    card_id: str


@dataclass(frozen=True)
class Select:
    card_id: str


@dataclass(frozen=True)
class Unlock:
    section: str


@dataclass(frozen=True)
class PostMotivation:
    value: int


@dataclass(frozen=True)
class Close:
    pass


SessionEvent = PreMotivation | IssueCards | Preview | Select | Unlock | PostMotivation | Close


@dataclass
class DailySession:
    session_id: str
    participant_id: str
    day_index: int
    date: Date
    arm: Arm
    state: SessionState = SessionState.STARTED
    cards: tuple[ProfileCard, ...] = ()
    reference_steps: int | None = None
    pre_motivation: int | None = None
    previews: list[str] = field(default_factory=list)
    selection: str | None = None
    unlock_events: list[tuple[str, str]] = field(default_factory=list)
    post_motivation: int | None = None
    steps: int | None = None
    wear: bool | None = None
    reward: Reward | None = None
    applied_events: list[tuple[SessionEvent, datetime]] = field(default_factory=list)
    _card_id_set: frozenset[str] = field(default_factory=frozenset, repr=False, compare=False)

    def card_ids(self) -> frozenset[str]:
        return self._card_id_set

    def selected_card(self) -> ProfileCard | None:
        for card in self.cards:
            if card.card_id == self.selection:
                return card
        return None


# --- operations -----------------------------------------------------------


@dataclass
class ConditionRegistry:
    """Per-gender enrollment bookkeeping for block-of-2 randomization."""

    counts: dict[str, int] = field(default_factory=dict)
    last_assignment: dict[str, Condition] = field(default_factory=dict)


def assign_condition(registry: ConditionRegistry, gender: str, rng: Random) -> Condition:
    """Stratified block randomization, block size 2 within each gender stream.

    Every consecutive pair of same-gender enrollees gets one control and one
    experimental slot; which comes first is random per block.
    """
    if gender not in KNOWN_GENDERS:
        raise ValidationError(f"unknown gender category {gender!r}")
    count = registry.counts.get(gender, 0)
    if count % 2 == 0:
        condition = Condition.CONTROL if rng.randrange(2) == 0 else Condition.EXPERIMENTAL
    else:
        previous = registry.last_assignment[gender]
        condition = (
            Condition.EXPERIMENTAL if previous is Condition.CONTROL else Condition.CONTROL
        )
    registry.counts[gender] = count + 1
    registry.last_assignment[gender] = condition
    return condition


def make_baseline_schedule(rng: Random, baseline_days: int = 9) -> list[Arm]:
    """A random permutation of the three arms repeated baseline_days/3 times each."""
    if baseline_days % len(ARMS) != 0:
        raise DomainError("baseline_days must be a multiple of the arm count")
    schedule = [arm for arm in ARMS for _ in range(baseline_days // len(ARMS))]
    rng.shuffle(schedule)
    return schedule


def arm_for_day(p: ParticipantModel, day_index: int, config: StudyConfig, rng: Random) -> Arm:
    """The arm to show on a data day: scheduled, uniform, or bandit-chosen."""
    if not 1 <= day_index <= config.total_days:
        raise DomainError(f"day_index {day_index} outside 1..{config.total_days}")
    if day_index <= config.baseline_days:
        return p.baseline_schedule[day_index - 1]
    if p.condition is Condition.CONTROL:
        return select_arm_uniform(rng)
    strategy = config.strategy
    if isinstance(strategy, Ucb1Strategy):
        return select_arm_ucb(p.arm_stats, strategy.exploration_c, rng)
    return select_arm_epsilon_greedy(p.arm_stats, strategy.epsilon, rng)


def _check_likert(value: int, config: StudyConfig, what: str) -> None:
    if not isinstance(value, int) or not config.likert_min <= value <= config.likert_max:
        raise ValidationError(
            f"{what} must be an integer in {config.likert_min}..{config.likert_max}, got {value!r}"
        )


def advance_session(
    s: DailySession,
    event: SessionEvent,
    config: StudyConfig,
    at: datetime,
) -> DailySession:
    """Apply one session event, enforcing the state machine order.

    Out-of-order events raise SequencingError; bad payloads raise
    ValidationError. The session is mutated in place and returned.
    """
    state = s.state
    if isinstance(event, PreMotivation):
        if state is not SessionState.STARTED:
            raise SequencingError(f"pre-motivation not allowed in state {state.value}")
        _check_likert(event.value, config, "pre-motivation")
        s.pre_motivation = event.value
        s.state = SessionState.PRE_RATED
    elif isinstance(event, IssueCards):
        if state is not SessionState.PRE_RATED:
            raise SequencingError(f"cards cannot be issued in state {state.value}")
        if len(event.cards) != 4:
            raise ValidationError("exactly four cards must be issued")
        s.cards = tuple(event.cards)
        s._card_id_set = frozenset(c.card_id for c in s.cards)
        s.reference_steps = event.reference_steps
        s.state = SessionState.CARDS_ISSUED
    elif isinstance(event, Preview):
        if state is not SessionState.CARDS_ISSUED:
            raise SequencingError(f"preview not allowed in state {state.value}")
        if event.card_id not in s.card_ids():
            raise ValidationError(f"unknown card {event.card_id!r}")
        s.previews.append(event.card_id)
    elif isinstance(event, Select):
        if state is not SessionState.CARDS_ISSUED:
            raise SequencingError(
                "selection already made" if s.selection is not None
                else f"select not allowed in state {state.value}"
            )
        if event.card_id not in s.card_ids():
            raise ValidationError(f"unknown card {event.card_id!r}")
        s.selection = event.card_id
        s.state = SessionState.SELECTED
    elif isinstance(event, Unlock):
        if state not in (SessionState.SELECTED, SessionState.POST_RATED):
            raise SequencingError(f"unlock not allowed in state {state.value}")
        if not event.section:
            raise ValidationError("unlock section must be non-empty")
        s.unlock_events.append((event.section, at.isoformat()))
    elif isinstance(event, PostMotivation):
        if state is not SessionState.SELECTED:
            raise SequencingError(f"post-motivation not allowed in state {state.value}")
        _check_likert(event.value, config, "post-motivation")
        s.post_motivation = event.value
        s.state = SessionState.POST_RATED
    elif isinstance(event, Close):
        if state is not SessionState.POST_RATED:
            raise SequencingError(f"close not allowed in state {state.value}")
        s.state = SessionState.CLOSED
    else:
        raise ValidationError(f"unknown session event {event!r}")
    s.applied_events.append((event, at))
    return s


def replay_session(
    session_id: str,
    participant_id: str,
    day_index: int,
    date: Date,
    arm: Arm,
    events: list[tuple[SessionEvent, datetime]],
    config: StudyConfig,
) -> DailySession:
    """Rebuild a session by folding its event log from scratch."""
    session = DailySession(
        session_id=session_id,
        participant_id=participant_id,
        day_index=day_index,
        date=date,
        arm=arm,
    )
    for event, at in events:
        advance_session(session, event, config, at)
    return session


def finalize_day(
    p: ParticipantModel,
    s: DailySession,
    steps: int,
    config: StudyConfig,
) -> tuple[ParticipantModel, DailySession]:
    """Close out a data day once its step total is known.

    Sets the wear flag, computes the reward (motivation-only on non-wear
    days), updates arm statistics and the running baseline mean, and bumps
    the participant's data-day counter. A second call is rejected.
    """
    if s.state is SessionState.FINALIZED:
        raise ConflictError(f"session {s.session_id} already finalized")
    if s.state is not SessionState.CLOSED:
        raise SequencingError(f"cannot finalize a session in state {s.state.value}")
    if not isinstance(steps, int) or steps < 0:
        raise ValidationError(f"steps must be a non-negative integer, got {steps!r}")

    wear = steps >= config.non_wear_threshold
    baseline = (
        p.baseline_mean_steps
        if p.baseline_mean_steps is not None
        else float(config.default_baseline_steps)
    )
    reward = compute_reward(
        s.pre_motivation,
        s.post_motivation,
        steps if wear else None,
        baseline,
        config.weights,
    )

    skip_stats = config.cold_start and s.day_index <= config.baseline_days
    if not skip_stats:
        p.arm_stats = update_stats(p.arm_stats, s.arm, reward)
    p.day_counter += 1
    if s.day_index <= config.baseline_days and wear:
        p.baseline_wear_steps.append(steps)
        p.baseline_mean_steps = sum(p.baseline_wear_steps) / len(p.baseline_wear_steps)

    s.steps = steps
    s.wear = wear
    s.reward = reward
    s.state = SessionState.FINALIZED
    return p, s


def reference_steps(
    p: ParticipantModel,
    history: list[tuple[Date, int]],
    config: StudyConfig,
) -> int:
    """Reference steps for card generation: last wear day, else baseline, else default.

    `history` must be (date, steps) pairs in ascending date order.
    """
    for _, steps in reversed(history):
        if steps >= config.non_wear_threshold:
            return steps
    if p.baseline_mean_steps is not None:
        return int(p.baseline_mean_steps + 0.5)
    return config.default_baseline_steps


__all__ = [
    "Condition",
    "ConditionRegistry",
    "DailySession",
    "EpsilonGreedyStrategy",
    "KNOWN_GENDERS",
    "ParticipantModel",
    "SessionEvent",
    "SessionState",
    "StudyConfig",
    "Strategy",
    "Ucb1Strategy",
    "advance_session",
    "arm_for_day",
    "assign_condition",
    "finalize_day",
    "make_baseline_schedule",
    "reference_steps",
    "replay_session",
    "IssueCards",
    "PreMotivation",
    "Preview",
    "Select",
    "Unlock",
    "PostMotivation",
    "Close",
]
