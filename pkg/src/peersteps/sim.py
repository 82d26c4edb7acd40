"""Synthetic participants with ground-truth comparison preferences.

A simulated user carries a preference score theta in [-1, +1] (-1: prefers
targets below their own steps, +1: above), chooses among the day's cards by
a softmax over distance to their ideal offset (0.25 * theta), and responds
to the shown arm in both reported motivation and actual steps. The harness
drives whole populations through the real protocol stack, standing in for
a human study at desk scale.
"""
from __future__ import annotations

import gc
import math
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from random import Random

from .bandit import Arm
from .errors import DomainError, ValidationError
from .events import EventStore
from .profiles import AttributePool, ProfileCard
from .protocol import StudyConfig
from .seeds import substream
from .service import SimClock, StudyEngine

SIM_EPOCH = Date(2024, 1, 1)

# A pure comparer's ideal target offset: midpoint of the extreme arm offsets.
IDEAL_OFFSET_SCALE = 0.25


@dataclass(frozen=True)
class SimUser:
    user_id: str
    theta: float  # comparison-direction preference, -1 (down) .. +1 (up)
    tau: float  # choice temperature
    alpha: float  # motivation responsiveness
    beta: float  # step responsiveness
    base_steps: float
    step_noise_sigma: float
    gender: str
    adherence: float = 1.0

    def __post_init__(self) -> None:
        if not -1.0 <= self.theta <= 1.0:
            raise DomainError(f"theta must lie in [-1, 1], got {self.theta}")
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        if self.alpha < 0 or self.beta < 0 or self.step_noise_sigma < 0:
            raise DomainError("alpha, beta, and step_noise_sigma must be non-negative")
        if self.base_steps <= 0:
            raise DomainError("base_steps must be positive")
        if not 0.0 <= self.adherence <= 1.0:
            raise DomainError("adherence must lie in [0, 1]")


# --- theta distributions ----------------------------------------------------


@dataclass(frozen=True)
class PointTheta:
    value: float

    def sample(self, rng: Random) -> float:
        return self.value


@dataclass(frozen=True)
class UniformTheta:
    low: float = -1.0
    high: float = 1.0

    def sample(self, rng: Random) -> float:
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class BimodalTheta:
    """+theta0 with probability mix, else -theta0."""

    theta0: float = 1.0
    mix: float = 0.5

    def sample(self, rng: Random) -> float:
        return self.theta0 if rng.random() < self.mix else -self.theta0


ThetaDist = PointTheta | UniformTheta | BimodalTheta

Range = tuple[float, float]


@dataclass(frozen=True)
class PopulationSpec:
    n_users: int
    theta: ThetaDist = BimodalTheta(1.0, 0.5)
    tau: float | Range = 0.05
    alpha: float | Range = 2.0
    beta: float | Range = 0.3
    base_steps: float | Range = (4000.0, 9000.0)
    step_noise_sigma: float | Range = 0.1
    adherence: float | Range = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_users < 1:
            raise DomainError("n_users must be at least 1")


def _draw(value: float | Range, rng: Random) -> float:
    if isinstance(value, tuple):
        low, high = value
        if high < low:
            raise DomainError(f"invalid range ({low}, {high})")
        return rng.uniform(low, high)
    return float(value)


def population_spec_from_dict(raw: dict) -> PopulationSpec:
    """Build a PopulationSpec from its JSON configuration schema."""
    theta_raw = raw.get("theta", {"kind": "bimodal", "theta0": 1.0, "mix": 0.5})
    kind = theta_raw.get("kind", "bimodal")
    theta: ThetaDist
    if kind == "point":
        theta = PointTheta(float(theta_raw["value"]))
    elif kind == "uniform":
        theta = UniformTheta(float(theta_raw.get("low", -1.0)), float(theta_raw.get("high", 1.0)))
    elif kind == "bimodal":
        theta = BimodalTheta(float(theta_raw.get("theta0", 1.0)), float(theta_raw.get("mix", 0.5)))
    else:
        raise ValidationError(f"unknown theta distribution kind {kind!r}")

    def ranged(name: str, default):
        value = raw.get(name, default)
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValidationError(f"{name} range must have exactly two bounds")
            return (float(value[0]), float(value[1]))
        return float(value)

    return PopulationSpec(
        n_users=int(raw.get("n_users", 48)),
        theta=theta,
        tau=ranged("tau", 0.05),
        alpha=ranged("alpha", 2.0),
        beta=ranged("beta", 0.3),
        base_steps=ranged("base_steps", (4000.0, 9000.0)),
        step_noise_sigma=ranged("step_noise_sigma", 0.1),
        adherence=ranged("adherence", 1.0),
        seed=int(raw.get("seed", 0)),
    )


def sample_population(spec: PopulationSpec) -> list[SimUser]:
    """Draw the population deterministically from the spec seed."""
    rng = substream(spec.seed, "population")
    users = []
    for i in range(1, spec.n_users + 1):
        users.append(
            SimUser(
                user_id=f"u{i:03d}",
                theta=spec.theta.sample(rng),
                tau=_draw(spec.tau, rng),
                alpha=_draw(spec.alpha, rng),
                beta=_draw(spec.beta, rng),
                base_steps=_draw(spec.base_steps, rng),
                step_noise_sigma=_draw(spec.step_noise_sigma, rng),
                gender="female" if rng.random() < 0.5 else "male",
                adherence=_draw(spec.adherence, rng),
            )
        )
    return users


# --- behavioral responses ---------------------------------------------------


def sim_choose_card(user: SimUser, cards: list[ProfileCard] | tuple[ProfileCard, ...], rng: Random) -> int:
    """Pick a card index, preferring offsets near the user's ideal target.

    Choice probability is proportional to exp(-|offset - 0.25*theta| / tau);
    weights are shifted by the closest distance so tiny temperatures stay
    numerically stable.
    """
    if len(cards) != 4:
        raise ValidationError(f"expected 4 cards, got {len(cards)}")
    ideal = IDEAL_OFFSET_SCALE * user.theta
    distances = [abs(card.true_offset - ideal) for card in cards]
    d_min = min(distances)
    weights = [math.exp(-(d - d_min) / user.tau) for d in distances]
    total = sum(weights)
    pick = rng.random() * total
    acc = 0.0
    for index, weight in enumerate(weights):
        acc += weight
        if pick < acc:
            return index
    return len(cards) - 1


def sim_motivation(user: SimUser, arm: Arm, rng: Random) -> tuple[int, int]:
    """(pre, post) Likert ratings: pre uniform over {2,3,4}, post shifted by the arm."""
    pre = 2 + rng.randrange(3)
    shift = math.floor(rng.gauss(user.alpha * user.theta * arm.direction, 0.5) + 0.5)
    post = min(max(pre + shift, 1), 5)
    return pre, post


def sim_daily_steps(user: SimUser, arm: Arm, rng: Random) -> int:
    """Daily step total: base scaled by the arm effect, with lognormal noise."""
    raw = (
        user.base_steps
        * (1.0 + user.beta * user.theta * arm.direction)
        * math.exp(rng.gauss(0.0, user.step_noise_sigma))
    )
    return max(0, math.floor(raw + 0.5))


# --- whole-study harness ------------------------------------------------------


@dataclass
class StudyRun:
    """Everything a completed simulated study leaves behind."""

    event_store: EventStore
    engine: StudyEngine
    users: list[SimUser]
    truth: dict[str, float] = field(default_factory=dict)  # participant_id -> theta
    sessions_finalized: int = 0


def run_study(
    config: StudyConfig,
    spec: PopulationSpec,
    event_store: EventStore | None = None,
    calendar_days: int | None = None,
    pool: AttributePool | None = None,
) -> StudyRun:
    """Enroll a simulated population and run it through the full daily flow.

    Fully deterministic given (config.seed, spec.seed): protocol randomness
    and user behavior draw from independent named substreams. Participants
    with adherence below 1 flip a daily coin; the calendar window defaults
    to total_days (full adherence) or 4/3 of it, mirroring a 21-in-28-day
    collection window.
    """
    users = sample_population(spec)
    clock = SimClock()
    engine = StudyEngine(config, event_store=event_store, clock=clock, pool=pool)

    full_adherence = all(u.adherence >= 1.0 for u in users)
    if calendar_days is None:
        calendar_days = (
            config.total_days if full_adherence else math.ceil(config.total_days * 4 / 3)
        )

    run = StudyRun(event_store=engine.events, engine=engine, users=users)

    participant_ids: list[str] = []
    for user in users:
        clock.set_day(SIM_EPOCH - timedelta(days=1))
        model = engine.enroll(external_id=user.user_id, gender=user.gender)
        participant_ids.append(model.participant_id)
        run.truth[model.participant_id] = user.theta

    # The day loop allocates heavily but creates no reference cycles;
    # pausing the collector keeps long horizons inside their time budget.
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for user, participant_id in zip(users, participant_ids):
            behavior = substream(spec.seed, "behavior", user.user_id)
            for calendar_day in range(calendar_days):
                model = engine.participants[participant_id]
                if model.day_counter >= config.total_days:
                    break
                if behavior.random() >= user.adherence:
                    continue
                day = SIM_EPOCH + timedelta(days=calendar_day)
                clock.set_day(day)
                session = engine.start_session(participant_id, day)
                pre, post = sim_motivation(user, session.arm, behavior)
                engine.record_pre_motivation(session.session_id, pre)
                cards = engine.issue_cards(session.session_id)
                choice = sim_choose_card(user, cards, behavior)
                engine.select(session.session_id, cards[choice].card_id)
                engine.record_post_motivation(session.session_id, post)
                steps = sim_daily_steps(user, session.arm, behavior)
                result = engine.ingest_steps(participant_id, day, steps, source="simulated")
                if result.finalized_session_id:
                    run.sessions_finalized += 1
    finally:
        if gc_was_enabled:
            gc.enable()
    return run
