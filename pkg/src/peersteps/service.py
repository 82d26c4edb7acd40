"""Study orchestration: one facade wiring protocol, profiles, steps, events.

Both the HTTP service and the simulation harness drive studies through this
engine, so a scripted day produces the same event stream regardless of
transport. Per-participant randomness comes from named substreams of the
study seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime, time, timedelta
from random import Random
from typing import Callable

from . import protocol
from .errors import ConflictError, NotFoundError, SequencingError
from .events import EventStore
from .profiles import AttributePool, ProfileCard, default_pool, generate_cards
from .protocol import (
    ConditionRegistry,
    DailySession,
    ParticipantModel,
    SessionState,
    StudyConfig,
)
from .seeds import substream
from .steps import StepStore


class SimClock:
    """Deterministic clock for simulated studies; ticks 10 s per reading."""

    def __init__(self, start: datetime | None = None, tick_seconds: int = 10):
        self._now = start or datetime(2024, 1, 1, 8, 0, 0)
        self._tick = timedelta(seconds=tick_seconds)

    def set_day(self, day: Date) -> None:
        self._now = datetime.combine(day, time(8, 0, 0))

    def __call__(self) -> datetime:
        now = self._now
        self._now = now + self._tick
        return now


@dataclass
class IngestResult:
    steps: int
    overwrote: int | None
    finalized_session_id: str | None


class StudyEngine:
    """Mutable study state plus the operations the endpoints expose."""

    def __init__(
        self,
        config: StudyConfig,
        event_store: EventStore | None = None,
        clock: Callable[[], datetime] | None = None,
        pool: AttributePool | None = None,
    ):
        self.config = config
        self.events = event_store if event_store is not None else EventStore()
        self.clock = clock or datetime.utcnow
        self.pool = pool or default_pool()
        self.participants: dict[str, ParticipantModel] = {}
        self.sessions: dict[str, DailySession] = {}
        self.steps = StepStore(participant_check=lambda pid: pid in self.participants)
        self._registry = ConditionRegistry()
        self._enroll_rng = substream(config.seed, "enroll")
        self._participant_rngs: dict[str, Random] = {}
        self._session_by_date: dict[tuple[str, str], str] = {}
        # Ascending (date, steps) per participant; rebuilt on out-of-order ingest.
        self._history_cache: dict[str, list[tuple[Date, int]]] = {}

    # --- helpers -----------------------------------------------------------

    def _rng(self, participant_id: str) -> Random:
        return self._participant_rngs[participant_id]

    def get_participant(self, participant_id: str) -> ParticipantModel:
        try:
            return self.participants[participant_id]
        except KeyError:
            raise NotFoundError(f"unknown participant {participant_id!r}") from None

    def get_session(self, session_id: str) -> DailySession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}") from None

    # --- operations ----------------------------------------------------------

    def enroll(self, external_id: str, gender: str, on: Date | None = None) -> ParticipantModel:
        ordinal = len(self.participants) + 1
        condition = protocol.assign_condition(self._registry, gender, self._enroll_rng)
        rng = substream(self.config.seed, "participant", ordinal)
        participant_id = f"p{ordinal:03d}"
        enrolled_on = on or self.clock().date()
        model = ParticipantModel(
            participant_id=participant_id,
            external_id=external_id,
            gender=gender,
            condition=condition,
            baseline_schedule=protocol.make_baseline_schedule(rng, self.config.baseline_days),
            enrolled_on=enrolled_on,
        )
        self.participants[participant_id] = model
        self._participant_rngs[participant_id] = rng
        self.events.append(
            "enrolled",
            participant_id,
            {
                "external_id": external_id,
                "gender": gender,
                "condition": condition.value,
                "baseline_schedule": [arm.value for arm in model.baseline_schedule],
                "enrolled_on": enrolled_on.isoformat(),
            },
            at=self.clock(),
        )
        return model

    def start_session(self, participant_id: str, on: Date) -> DailySession:
        model = self.get_participant(participant_id)
        key = (participant_id, on.isoformat())
        if key in self._session_by_date:
            raise ConflictError(f"session already exists for {participant_id} on {on}")
        if model.day_counter >= self.config.total_days:
            raise ConflictError(f"study complete for {participant_id}")
        day_index = model.day_counter + 1
        arm = protocol.arm_for_day(model, day_index, self.config, self._rng(participant_id))
        session = DailySession(
            session_id=f"{participant_id}-{on.isoformat()}",
            participant_id=participant_id,
            day_index=day_index,
            date=on,
            arm=arm,
        )
        self.sessions[session.session_id] = session
        self._session_by_date[key] = session.session_id
        self.events.append(
            "arm_chosen",
            participant_id,
            {
                "session_id": session.session_id,
                "date": on.isoformat(),
                "arm": arm.value,
                "phase": "baseline" if day_index <= self.config.baseline_days else "adaptive",
            },
            day_index=day_index,
            at=self.clock(),
        )
        return session

    def record_pre_motivation(self, session_id: str, value: int) -> DailySession:
        session = self.get_session(session_id)
        at = self.clock()
        protocol.advance_session(session, protocol.PreMotivation(value), self.config, at)
        self.events.append(
            "pre_motivation",
            session.participant_id,
            {"session_id": session_id, "value": value},
            day_index=session.day_index,
            at=at,
        )
        return session

    def issue_cards(self, session_id: str) -> tuple[ProfileCard, ...]:
        """Generate the day's four cards on first read; re-reads are idempotent."""
        session = self.get_session(session_id)
        if session.cards:
            return session.cards
        if session.state is not SessionState.PRE_RATED:
            raise SequencingError(
                f"cards cannot be issued in state {session.state.value}"
            )
        model = self.get_participant(session.participant_id)
        history = self._history_before(session.participant_id, session.date)
        reference = protocol.reference_steps(model, history, self.config)
        cards = generate_cards(
            session.arm, reference, self._rng(session.participant_id), self.pool
        )
        at = self.clock()
        protocol.advance_session(
            session, protocol.IssueCards(tuple(cards), reference), self.config, at
        )
        self.events.append(
            "cards_shown",
            session.participant_id,
            {
                "session_id": session_id,
                "reference_steps": reference,
                "cards": [card.as_dict() for card in cards],
            },
            day_index=session.day_index,
            at=at,
        )
        return session.cards

    def preview(self, session_id: str, card_id: str) -> DailySession:
        session = self.get_session(session_id)
        at = self.clock()
        protocol.advance_session(session, protocol.Preview(card_id), self.config, at)
        self.events.append(
            "preview",
            session.participant_id,
            {"session_id": session_id, "card_id": card_id},
            day_index=session.day_index,
            at=at,
        )
        return session

    def select(self, session_id: str, card_id: str) -> ProfileCard:
        session = self.get_session(session_id)
        at = self.clock()
        protocol.advance_session(session, protocol.Select(card_id), self.config, at)
        card = session.selected_card()
        self.events.append(
            "selected",
            session.participant_id,
            {"session_id": session_id, "card_id": card_id, "true_offset": card.true_offset},
            day_index=session.day_index,
            at=at,
        )
        return card

    def unlock(self, session_id: str, section: str) -> DailySession:
        session = self.get_session(session_id)
        at = self.clock()
        protocol.advance_session(session, protocol.Unlock(section), self.config, at)
        self.events.append(
            "unlock",
            session.participant_id,
            {"session_id": session_id, "section": section},
            day_index=session.day_index,
            at=at,
        )
        return session

    def record_post_motivation(self, session_id: str, value: int) -> DailySession:
        """Record the post rating and close the session in one step."""
        session = self.get_session(session_id)
        at = self.clock()
        protocol.advance_session(session, protocol.PostMotivation(value), self.config, at)
        protocol.advance_session(session, protocol.Close(), self.config, at)
        self.events.append(
            "post_motivation",
            session.participant_id,
            {"session_id": session_id, "value": value},
            day_index=session.day_index,
            at=at,
        )
        return session

    def _history_before(self, participant_id: str, date: Date) -> list[tuple[Date, int]]:
        cached = self._history_cache.get(participant_id)
        if cached is None:
            cached = self._history_cache[participant_id] = self.steps.history(participant_id)
        if cached and cached[-1][0] >= date:
            return [pair for pair in cached if pair[0] < date]
        return cached

    def ingest_steps(
        self, participant_id: str, on: Date, steps: int, source: str = "ingested"
    ) -> IngestResult:
        """Upsert a day's step total and finalize its session if one is closed."""
        previous = self.steps.get(participant_id, on)
        self.steps.ingest(participant_id, on, steps, source)
        cached = self._history_cache.get(participant_id)
        if cached is not None:
            if previous is None and (not cached or cached[-1][0] < on):
                cached.append((on, steps))
            else:
                self._history_cache[participant_id] = self.steps.history(participant_id)
        payload = {"date": on.isoformat(), "steps": steps, "source": source}
        if previous is not None:
            payload["overwrote"] = previous
        self.events.append("steps_ingested", participant_id, payload, at=self.clock())

        finalized: str | None = None
        session_id = self._session_by_date.get((participant_id, on.isoformat()))
        if session_id is not None:
            session = self.sessions[session_id]
            if session.state is SessionState.CLOSED:
                self._finalize(session, steps)
                finalized = session_id
        return IngestResult(steps=steps, overwrote=previous, finalized_session_id=finalized)

    def _finalize(self, session: DailySession, steps: int) -> None:
        model = self.get_participant(session.participant_id)
        protocol.finalize_day(model, session, steps, self.config)
        self.events.append(
            "finalized",
            session.participant_id,
            {
                "session_id": session.session_id,
                "arm": session.arm.value,
                "steps": steps,
                "wear": session.wear,
                "reward": {
                    "value": session.reward.value,
                    "motivation_component": session.reward.motivation_component,
                    "steps_component": session.reward.steps_component,
                },
                "baseline_mean_steps": model.baseline_mean_steps,
            },
            day_index=session.day_index,
            at=self.clock(),
        )
