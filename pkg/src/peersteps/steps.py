"""Daily step acquisition: keyed upserts, CSV replay, and export.

One record per (participant, date); later ingestion for the same key
overwrites the previous value and the overwrite is kept on an audit list,
since wearable syncs routinely revise daily totals.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path
from typing import Callable, Iterator

from .errors import NotFoundError, ValidationError

STEP_CSV_HEADER = ["participant_id", "date", "steps"]

_STEPS_PATTERN = re.compile(r"^\d+$")


@dataclass(frozen=True)
class StepRecord:
    participant_id: str
    date: Date
    steps: int
    source: str  # replay | simulated | ingested


@dataclass(frozen=True)
class OverwriteEvent:
    previous: StepRecord
    replacement: StepRecord


class StepStore:
    """In-memory step records with read-your-writes semantics."""

    def __init__(self, participant_check: Callable[[str], bool] | None = None):
        self._by_participant: dict[str, dict[Date, StepRecord]] = {}
        self._participant_check = participant_check
        self.overwrites: list[OverwriteEvent] = []

    def ingest(
        self, participant_id: str, date: Date, steps: int, source: str = "ingested"
    ) -> StepRecord:
        if self._participant_check is not None and not self._participant_check(participant_id):
            raise NotFoundError(f"unknown participant {participant_id!r}")
        if not isinstance(steps, int) or steps < 0:
            raise ValidationError(f"steps must be a non-negative integer, got {steps!r}")
        record = StepRecord(participant_id, date, steps, source)
        days = self._by_participant.setdefault(participant_id, {})
        previous = days.get(date)
        if previous is not None:
            self.overwrites.append(OverwriteEvent(previous, record))
        days[date] = record
        return record

    def get(self, participant_id: str, date: Date) -> int | None:
        record = self._by_participant.get(participant_id, {}).get(date)
        return record.steps if record else None

    def history(self, participant_id: str, before: Date | None = None) -> list[tuple[Date, int]]:
        """(date, steps) pairs for one participant, ascending, optionally before a date."""
        days = self._by_participant.get(participant_id, {})
        return sorted(
            (date, record.steps)
            for date, record in days.items()
            if before is None or date < before
        )

    def records(self) -> list[StepRecord]:
        out = []
        for pid in sorted(self._by_participant):
            days = self._by_participant[pid]
            out.extend(days[date] for date in sorted(days))
        return out


def replay_from_file(
    path: str | Path,
    strict: bool = True,
    errors: list[str] | None = None,
    source: str = "replay",
) -> Iterator[StepRecord]:
    """Stream step records from a CSV file (header: participant_id,date,steps).

    Malformed rows abort with their line number under strict mode; otherwise
    they are skipped and reported through the `errors` accumulator.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"step file not found: {path}")

    def bad(lineno: int, message: str) -> None:
        note = f"line {lineno}: {message}"
        if strict:
            raise ValidationError(f"{path}: {note}")
        if errors is not None:
            errors.append(note)

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if row != STEP_CSV_HEADER:
                    bad(lineno, f"expected header {','.join(STEP_CSV_HEADER)!r}")
                continue
            if not row:
                continue
            if len(row) != 3:
                bad(lineno, f"expected 3 columns, got {len(row)}")
                continue
            pid, date_str, steps_str = (cell.strip() for cell in row)
            if not pid:
                bad(lineno, "empty participant_id")
                continue
            try:
                date = Date.fromisoformat(date_str)
            except ValueError:
                bad(lineno, f"bad date {date_str!r}")
                continue
            if not _STEPS_PATTERN.match(steps_str):
                bad(lineno, f"bad steps {steps_str!r}")
                continue
            yield StepRecord(pid, date, int(steps_str), source)


def write_steps_csv(records: list[StepRecord], path: str | Path) -> int:
    """Write records in the exact replay schema; returns the row count."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STEP_CSV_HEADER)
        count = 0
        for record in records:
            writer.writerow([record.participant_id, record.date.isoformat(), record.steps])
            count += 1
    return count
