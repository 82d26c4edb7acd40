"""Append-only event log: the source of truth for all protocol state.

Events are newline-delimited JSON records with a store-wide monotone
sequence number. Participant and session state are derived by folding a
participant's stream; the flat CSV exports below feed the analysis
pipeline.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from pathlib import Path
from typing import IO, NamedTuple

from .bandit import Arm
from .errors import ValidationError
from .protocol import Condition, ParticipantModel, StudyConfig

SESSIONS_CSV_HEADER = [
    "participant_id",
    "condition",
    "day_index",
    "date",
    "arm",
    "pre_motivation",
    "post_motivation",
    "selected_offset",
    "previews",
    "steps",
    "wear",
    "reward",
]

REWARDS_CSV_HEADER = [
    "participant_id",
    "day_index",
    "date",
    "arm",
    "reward",
    "motivation_component",
    "steps_component",
]

STEPS_CSV_HEADER = ["participant_id", "date", "steps"]

# Required payload keys per event kind.
EVENT_SCHEMAS: dict[str, frozenset[str]] = {
    "enrolled": frozenset(
        ("external_id", "gender", "condition", "baseline_schedule", "enrolled_on")
    ),
    "arm_chosen": frozenset(("session_id", "date", "arm", "phase")),
    "cards_shown": frozenset(("session_id", "reference_steps", "cards")),
    "pre_motivation": frozenset(("session_id", "value")),
    "preview": frozenset(("session_id", "card_id")),
    "selected": frozenset(("session_id", "card_id", "true_offset")),
    "unlock": frozenset(("session_id", "section")),
    "post_motivation": frozenset(("session_id", "value")),
    "steps_ingested": frozenset(("date", "steps", "source")),
    "finalized": frozenset(
        ("session_id", "arm", "steps", "wear", "reward", "baseline_mean_steps")
    ),
}


class Event(NamedTuple):
    """One immutable log record; ts holds a datetime until serialization."""

    seq: int
    ts: "datetime | str"
    participant_id: str
    day_index: int | None
    kind: str
    payload: dict

    @property
    def ts_iso(self) -> str:
        return self.ts if isinstance(self.ts, str) else self.ts.isoformat()

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "ts": self.ts_iso,
                "participant_id": self.participant_id,
                "day_index": self.day_index,
                "kind": self.kind,
                "payload": self.payload,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "Event":
        data = json.loads(line)
        return cls(
            seq=data["seq"],
            ts=data["ts"],
            participant_id=data["participant_id"],
            day_index=data.get("day_index"),
            kind=data["kind"],
            payload=data["payload"],
        )


class EventStore:
    """Single-writer append-only store, optionally persisted as JSONL."""

    def __init__(self, path: str | Path | None = None):
        self._events: list[Event] = []
        self._path = Path(path) if path is not None else None
        self._fh: IO[str] | None = None
        if self._path is not None:
            if self._path.exists():
                with self._path.open(encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if line:
                            self._events.append(Event.from_json(line))
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self._path.open("a", encoding="utf-8")
        self._next_seq = self._events[-1].seq + 1 if self._events else 1

    @property
    def next_seq(self) -> int:
        return self._next_seq

    def append(
        self,
        kind: str,
        participant_id: str,
        payload: dict,
        day_index: int | None = None,
        at: datetime | None = None,
    ) -> Event:
        """Validate and durably append one event; returns it with its seq."""
        schema = EVENT_SCHEMAS.get(kind)
        if schema is None:
            raise ValidationError(f"unknown event kind {kind!r}")
        if not isinstance(payload, dict):
            raise ValidationError("payload must be a mapping")
        if not schema <= payload.keys():
            missing = sorted(schema - payload.keys())
            raise ValidationError(f"{kind} payload missing keys: {', '.join(missing)}")
        event = Event(
            self._next_seq, at or datetime.utcnow(), participant_id, day_index, kind, payload
        )
        if self._fh is not None:
            self._fh.write(event.to_json() + "\n")
            self._fh.flush()
        self._events.append(event)
        self._next_seq += 1
        return event

    def read_stream(self, participant_id: str) -> list[Event]:
        return [e for e in self._events if e.participant_id == participant_id]

    def all_events(self) -> list[Event]:
        return list(self._events)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def save_jsonl(self, path: str | Path) -> int:
        """Dump the full log to a JSONL file; returns the event count."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for event in self._events:
                fh.write(event.to_json() + "\n")
        return len(self._events)

    # --- exports ---------------------------------------------------------

    def export_csv(self, which: str, destination: str | Path) -> int:
        """Write one of the flat exports {sessions, steps, rewards}."""
        if which == "sessions":
            rows = [_session_csv_row(s) for s in fold_sessions(self._events) if s.finalized]
        elif which == "steps":
            rows = _step_rows(self._events)
        elif which == "rewards":
            rows = [_reward_csv_row(s) for s in fold_sessions(self._events) if s.finalized]
        else:
            raise ValidationError(f"unknown export {which!r}")
        header = {
            "sessions": SESSIONS_CSV_HEADER,
            "steps": STEPS_CSV_HEADER,
            "rewards": REWARDS_CSV_HEADER,
        }[which]
        destination = Path(destination)
        destination.parent.mkdir(parents=True, exist_ok=True)
        with destination.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return len(rows)


# --- folds ----------------------------------------------------------------


@dataclass
class SessionRow:
    """One session's flat view, as used by exports and analysis."""

    participant_id: str
    condition: str
    day_index: int
    date: str
    arm: str
    pre_motivation: int | None = None
    post_motivation: int | None = None
    selected_offset: float | None = None
    previews: list[int] = field(default_factory=list)
    steps: int | None = None
    wear: bool | None = None
    reward: float | None = None
    motivation_component: float | None = None
    steps_component: float | None = None
    finalized: bool = False


def fold_sessions(events: list[Event]) -> list[SessionRow]:
    """Derive per-session rows from the log, ordered by (participant, day)."""
    conditions: dict[str, str] = {}
    sessions: dict[str, SessionRow] = {}
    card_order: dict[str, list[str]] = {}
    card_offsets: dict[str, dict[str, float]] = {}
    for event in events:
        kind, payload = event.kind, event.payload
        if kind == "enrolled":
            conditions[event.participant_id] = payload["condition"]
        elif kind == "arm_chosen":
            sid = payload["session_id"]
            sessions[sid] = SessionRow(
                participant_id=event.participant_id,
                condition=conditions.get(event.participant_id, ""),
                day_index=event.day_index,
                date=payload["date"],
                arm=payload["arm"],
            )
        elif kind == "cards_shown":
            sid = payload["session_id"]
            card_order[sid] = [card["card_id"] for card in payload["cards"]]
            card_offsets[sid] = {
                card["card_id"]: card["true_offset"] for card in payload["cards"]
            }
        elif kind == "pre_motivation":
            sessions[payload["session_id"]].pre_motivation = payload["value"]
        elif kind == "preview":
            sid = payload["session_id"]
            ordinal = card_order[sid].index(payload["card_id"]) + 1
            sessions[sid].previews.append(ordinal)
        elif kind == "selected":
            sid = payload["session_id"]
            sessions[sid].selected_offset = card_offsets[sid][payload["card_id"]]
        elif kind == "post_motivation":
            sessions[payload["session_id"]].post_motivation = payload["value"]
        elif kind == "finalized":
            row = sessions[payload["session_id"]]
            row.steps = payload["steps"]
            row.wear = payload["wear"]
            row.reward = payload["reward"]["value"]
            row.motivation_component = payload["reward"]["motivation_component"]
            row.steps_component = payload["reward"]["steps_component"]
            row.finalized = True
    return sorted(sessions.values(), key=lambda r: (r.participant_id, r.day_index))


def fold_participant(
    events: list[Event], participant_id: str, config: StudyConfig
) -> ParticipantModel:
    """Left-fold one participant's stream back into a ParticipantModel."""
    model: ParticipantModel | None = None
    for event in events:
        if event.participant_id != participant_id:
            continue
        if event.kind == "enrolled":
            payload = event.payload
            model = ParticipantModel(
                participant_id=participant_id,
                external_id=payload["external_id"],
                gender=payload["gender"],
                condition=Condition(payload["condition"]),
                baseline_schedule=[Arm.from_wire(a) for a in payload["baseline_schedule"]],
                enrolled_on=Date.fromisoformat(payload["enrolled_on"]),
            )
        elif event.kind == "finalized":
            if model is None:
                raise ValidationError(f"finalized before enrolled for {participant_id}")
            payload = event.payload
            skip_stats = config.cold_start and event.day_index <= config.baseline_days
            if not skip_stats:
                row = model.arm_stats.rows[Arm.from_wire(payload["arm"])]
                row.pulls += 1
                row.reward_sum += payload["reward"]["value"]
            model.day_counter += 1
            if event.day_index <= config.baseline_days and payload["wear"]:
                model.baseline_wear_steps.append(payload["steps"])
                model.baseline_mean_steps = sum(model.baseline_wear_steps) / len(
                    model.baseline_wear_steps
                )
    if model is None:
        raise ValidationError(f"no enrollment event for {participant_id}")
    return model


# --- CSV row shaping --------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _session_csv_row(row: SessionRow) -> list[str]:
    return [
        row.participant_id,
        row.condition,
        str(row.day_index),
        row.date,
        row.arm,
        _fmt(row.pre_motivation),
        _fmt(row.post_motivation),
        "" if row.selected_offset is None else f"{row.selected_offset:.2f}",
        ";".join(str(i) for i in row.previews),
        _fmt(row.steps),
        _fmt(row.wear),
        _fmt(row.reward),
    ]


def _reward_csv_row(row: SessionRow) -> list[str]:
    return [
        row.participant_id,
        str(row.day_index),
        row.date,
        row.arm,
        _fmt(row.reward),
        _fmt(row.motivation_component),
        _fmt(row.steps_component),
    ]


def _step_rows(events: list[Event]) -> list[list[str]]:
    latest: dict[tuple[str, str], int] = {}
    for event in events:
        if event.kind == "steps_ingested":
            latest[(event.participant_id, event.payload["date"])] = event.payload["steps"]
    return [[pid, date, str(steps)] for (pid, date), steps in sorted(latest.items())]
