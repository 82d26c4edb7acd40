"""Statistical pipeline over exported session logs.

Covers the study's quantitative readouts: the per-day correlation between
shown-arm direction and ground-truth preference, within-person selection
stability (one-way random-effects ICC), step averages by arm/condition/
phase with non-wear days excluded, motivation-change summaries, and a
Welch two-sample test on the overall motivation deltas. Every number is a
deterministic function of the log.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import DomainError, ValidationError
from .events import SESSIONS_CSV_HEADER, SessionRow

ARM_DIRECTION = {"down": -1, "mixed": 0, "up": 1}

PHASES = ("pre", "during")

DEFAULT_MIN_DAYS = 14


class UndefinedCorrelationError(DomainError):
    """Correlation requested on a zero-variance input."""


# --- scalar kernels ---------------------------------------------------------


def pearson(xs: Sequence[float | None], ys: Sequence[float | None]) -> float:
    """Product-moment correlation; pairs with a missing side are dropped first."""
    if len(xs) != len(ys):
        raise DomainError(f"length mismatch: {len(xs)} vs {len(ys)}")
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    n = len(pairs)
    if n < 2:
        raise DomainError(f"need at least 2 complete pairs, got {n}")
    mean_x = sum(x for x, _ in pairs) / n
    mean_y = sum(y for _, y in pairs) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in pairs)
    syy = sum((y - mean_y) ** 2 for _, y in pairs)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in pairs)
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def _beta_cf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    # Lentz's continued fraction for the incomplete beta integral.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= eps:
            return h
    raise DomainError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) with relative error well below 1e-10 in the t-test range."""
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with df degrees of freedom, t >= 0."""
    if t < 0:
        raise DomainError("student_t_sf expects t >= 0")
    if df <= 0:
        raise DomainError("degrees of freedom must be positive")
    return 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def welch_t(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Welch's unequal-variance t statistic, Welch-Satterthwaite df, two-sided p."""
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2:
        raise DomainError("each sample needs at least 2 observations")
    mean_x = sum(xs) / nx
    mean_y = sum(ys) / ny
    var_x = sum((x - mean_x) ** 2 for x in xs) / (nx - 1)
    var_y = sum((y - mean_y) ** 2 for y in ys) / (ny - 1)
    if var_x == 0.0 and var_y == 0.0:
        raise DomainError("both samples have zero variance")
    se2 = var_x / nx + var_y / ny
    t = (mean_x - mean_y) / math.sqrt(se2)
    df = se2 * se2 / (
        (var_x / nx) ** 2 / (nx - 1) + (var_y / ny) ** 2 / (ny - 1)
    )
    p = 2.0 * student_t_sf(abs(t), df)
    return t, df, min(p, 1.0)


def icc_oneway(groups: Sequence[Sequence[float]]) -> float:
    """One-way random-effects ICC(1) with the k0 correction for unbalanced groups.

    Negative estimates clamp to 0. Degenerate inputs (under 2 groups, an
    empty group, too few observations, or no variance at all) are domain
    errors.
    """
    n_groups = len(groups)
    if n_groups < 2:
        raise DomainError("need at least 2 groups")
    sizes = [len(g) for g in groups]
    if any(size == 0 for size in sizes):
        raise DomainError("groups must be non-empty")
    total = sum(sizes)
    if total - n_groups < 2:
        raise DomainError("need at least 2 observations beyond the group count")
    grand = sum(sum(g) for g in groups) / total
    means = [sum(g) / len(g) for g in groups]
    ss_between = sum(k * (m - grand) ** 2 for k, m in zip(sizes, means))
    ss_within = sum(
        sum((x - m) ** 2 for x in g) for g, m in zip(groups, means)
    )
    ms_between = ss_between / (n_groups - 1)
    ms_within = ss_within / (total - n_groups)
    k0 = (total - sum(k * k for k in sizes) / total) / (n_groups - 1)
    denominator = ms_between + (k0 - 1.0) * ms_within
    if denominator == 0.0:
        raise DomainError("no variance in the data")
    return max(0.0, (ms_between - ms_within) / denominator)


# --- log-level operations ----------------------------------------------------


def _phase_of(day_index: int, baseline_days: int) -> str:
    return "pre" if day_index <= baseline_days else "during"


def completed_days(rows: list[SessionRow]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for row in rows:
        if row.finalized:
            counts[row.participant_id] = counts.get(row.participant_id, 0) + 1
    return counts


def excluded_participants(rows: list[SessionRow], min_days: int = DEFAULT_MIN_DAYS) -> set[str]:
    """Participants with fewer completed data days than the analysis floor."""
    return {pid for pid, days in completed_days(rows).items() if days < min_days}


def correlation_series(
    rows: list[SessionRow],
    truth: dict[str, float],
    min_pairs: int = 3,
) -> list[dict]:
    """Per-day Pearson r between shown-arm direction and preference score.

    Only experimental-condition sessions count. Days with fewer than
    `min_pairs` pairs, or zero variance on either side, report r as None.
    """
    experimental = [r for r in rows if r.condition == "experimental"]
    missing = {r.participant_id for r in experimental} - set(truth)
    if missing:
        raise ValidationError(
            f"preference scores missing for: {', '.join(sorted(missing))}"
        )
    if not experimental:
        return []
    series = []
    for day in range(1, max(r.day_index for r in experimental) + 1):
        pairs = [
            (ARM_DIRECTION[r.arm], truth[r.participant_id])
            for r in experimental
            if r.day_index == day
        ]
        r_value: float | None
        if len(pairs) < min_pairs:
            r_value = None
        else:
            try:
                r_value = pearson([p[0] for p in pairs], [p[1] for p in pairs])
            except UndefinedCorrelationError:
                r_value = None
        series.append({"day": day, "n": len(pairs), "r": r_value})
    return series


def selection_stability(
    rows: list[SessionRow],
    condition: str,
    phase: str,
    baseline_days: int = 9,
) -> float:
    """ICC of daily selected offsets, grouped by participant, for one cell."""
    if phase not in PHASES:
        raise DomainError(f"unknown phase {phase!r}")
    groups: dict[str, list[float]] = {}
    for row in rows:
        if (
            row.condition == condition
            and row.selected_offset is not None
            and _phase_of(row.day_index, baseline_days) == phase
        ):
            groups.setdefault(row.participant_id, []).append(row.selected_offset)
    eligible = [obs for obs in groups.values() if len(obs) >= 2]
    if len(eligible) < 2:
        raise DomainError(
            f"fewer than 2 participants with 2+ selections for {condition}/{phase}"
        )
    return icc_oneway(eligible)


def _mean_se(values: list[float]) -> tuple[float, float | None]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, None
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    return mean, sd / math.sqrt(n)


def step_summary(
    rows: list[SessionRow],
    baseline_days: int = 9,
    min_days: int = DEFAULT_MIN_DAYS,
) -> dict:
    """Mean daily steps per (arm, condition, phase) over wear-day sessions.

    Non-wear days are excluded from the cells; participants with fewer than
    `min_days` completed days are excluded entirely. Both exclusion counts
    are reported alongside the table.
    """
    excluded = excluded_participants(rows, min_days)
    non_wear = sum(1 for r in rows if r.finalized and r.wear is False)
    cells: dict[tuple[str, str, str], list[float]] = {}
    for row in rows:
        if not row.finalized or not row.wear or row.participant_id in excluded:
            continue
        key = (row.arm, row.condition, _phase_of(row.day_index, baseline_days))
        cells.setdefault(key, []).append(float(row.steps))
    table = []
    for (arm, condition, phase), values in sorted(cells.items()):
        mean, se = _mean_se(values)
        table.append(
            {
                "arm": arm,
                "condition": condition,
                "phase": phase,
                "n": len(values),
                "mean_steps": mean,
                "se": se,
            }
        )
    return {
        "cells": table,
        "exclusions": {
            "non_wear_days": non_wear,
            "participants_under_min_days": len(excluded),
            "min_days": min_days,
        },
    }


def motivation_summary(rows: list[SessionRow], min_days: int = DEFAULT_MIN_DAYS) -> dict:
    """Motivation change (post - pre) per (condition, arm) plus overall means."""
    excluded = excluded_participants(rows, min_days)
    cells: dict[tuple[str, str], list[float]] = {}
    overall: dict[str, list[float]] = {}
    for row in rows:
        if (
            not row.finalized
            or row.pre_motivation is None
            or row.post_motivation is None
            or row.participant_id in excluded
        ):
            continue
        delta = float(row.post_motivation - row.pre_motivation)
        cells.setdefault((row.condition, row.arm), []).append(delta)
        overall.setdefault(row.condition, []).append(delta)
    table = []
    for (condition, arm), values in sorted(cells.items()):
        mean, se = _mean_se(values)
        table.append(
            {"condition": condition, "arm": arm, "n": len(values), "mean_delta": mean, "se": se}
        )
    overall_rows = []
    for condition, values in sorted(overall.items()):
        mean, se = _mean_se(values)
        overall_rows.append({"condition": condition, "n": len(values), "mean_delta": mean, "se": se})
    return {"cells": table, "overall": overall_rows, "deltas_by_condition": overall}


# --- full report -------------------------------------------------------------


@dataclass
class AnalysisReport:
    exclusions: dict
    correlation_series: list[dict] = field(default_factory=list)
    icc: dict = field(default_factory=dict)
    step_table: list[dict] = field(default_factory=list)
    motivation_table: list[dict] = field(default_factory=list)
    motivation_overall: list[dict] = field(default_factory=list)
    welch: dict | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "exclusions": self.exclusions,
            "correlation_series": self.correlation_series,
            "icc": self.icc,
            "step_table": self.step_table,
            "motivation_table": self.motivation_table,
            "motivation_overall": self.motivation_overall,
            "welch": self.welch,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def render_text(self) -> str:
        lines = []
        ex = self.exclusions
        lines.append("Analysis report")
        lines.append("===============")
        lines.append(
            f"Exclusions: {ex['non_wear_days']} non-wear day(s); "
            f"{ex['participants_under_min_days']} participant(s) under "
            f"{ex['min_days']} completed days"
        )
        lines.append("")
        lines.append("Selection-stability ICC (by condition and phase)")
        lines.append(f"  {'condition':<14}{'pre':>10}{'during':>10}")
        for condition in ("control", "experimental"):
            row = self.icc.get(condition, {})
            pre = _num(row.get("pre"))
            during = _num(row.get("during"))
            lines.append(f"  {condition:<14}{pre:>10}{during:>10}")
        lines.append("")
        lines.append("Daily steps by arm / condition / phase (wear days only)")
        lines.append(
            f"  {'arm':<8}{'condition':<14}{'phase':<8}{'n':>5}{'mean':>10}{'se':>9}"
        )
        for cell in self.step_table:
            lines.append(
                f"  {cell['arm']:<8}{cell['condition']:<14}{cell['phase']:<8}"
                f"{cell['n']:>5}{_num(cell['mean_steps'], 1):>10}{_num(cell['se'], 1):>9}"
            )
        lines.append("")
        lines.append("Motivation change, post minus pre (all completed sessions)")
        lines.append(f"  {'condition':<14}{'arm':<8}{'n':>5}{'mean':>9}{'se':>9}")
        for cell in self.motivation_table:
            lines.append(
                f"  {cell['condition']:<14}{cell['arm']:<8}{cell['n']:>5}"
                f"{_num(cell['mean_delta']):>9}{_num(cell['se']):>9}"
            )
        for cell in self.motivation_overall:
            lines.append(
                f"  {cell['condition']:<14}{'overall':<8}{cell['n']:>5}"
                f"{_num(cell['mean_delta']):>9}{_num(cell['se']):>9}"
            )
        lines.append("")
        if self.welch:
            lines.append(
                "Welch t-test on motivation deltas (experimental vs control): "
                f"t={self.welch['t']:.4f}, df={self.welch['df']:.1f}, p={self.welch['p']:.4g}"
            )
        else:
            lines.append("Welch t-test on motivation deltas: not computable")
        lines.append("")
        if self.correlation_series:
            lines.append("Arm direction vs preference, Pearson r per day")
            for entry in self.correlation_series:
                lines.append(
                    f"  day {entry['day']:>3}: r={_num(entry['r'], 4):>8}  (n={entry['n']})"
                )
        for note in self.notes:
            lines.append(f"note: {note}")
        lines.append("")
        return "\n".join(lines)


def _num(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def build_report(
    rows: list[SessionRow],
    truth: dict[str, float] | None = None,
    baseline_days: int = 9,
    min_days: int = DEFAULT_MIN_DAYS,
) -> AnalysisReport:
    """Assemble the full report from session rows (plus optional ground truth)."""
    steps = step_summary(rows, baseline_days, min_days)
    motivation = motivation_summary(rows, min_days)

    icc: dict = {}
    for condition in ("control", "experimental"):
        icc[condition] = {}
        for phase in PHASES:
            try:
                icc[condition][phase] = selection_stability(
                    rows, condition, phase, baseline_days
                )
            except DomainError:
                icc[condition][phase] = None

    welch: dict | None = None
    deltas = motivation["deltas_by_condition"]
    if "experimental" in deltas and "control" in deltas:
        try:
            t, df, p = welch_t(deltas["experimental"], deltas["control"])
            welch = {"t": t, "df": df, "p": p}
        except DomainError:
            welch = None

    series: list[dict] = []
    notes = ["multilevel covariate-adjusted models: not computed"]
    if truth is not None:
        series = correlation_series(rows, truth)
    else:
        notes.append("correlation series omitted: no preference scores supplied")

    return AnalysisReport(
        exclusions=steps["exclusions"],
        correlation_series=series,
        icc=icc,
        step_table=steps["cells"],
        motivation_table=motivation["cells"],
        motivation_overall=motivation["overall"],
        welch=welch,
        notes=notes,
    )


# --- log loading -------------------------------------------------------------


def sessions_from_csv(path: str | Path) -> list[SessionRow]:
    """Parse a sessions export back into rows (finalized sessions only)."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SESSIONS_CSV_HEADER:
            raise ValidationError(f"unexpected sessions header in {path}")
        for record in reader:
            (
                pid,
                condition,
                day_index,
                date,
                arm,
                pre,
                post,
                offset,
                previews,
                steps,
                wear,
                reward,
            ) = record
            rows.append(
                SessionRow(
                    participant_id=pid,
                    condition=condition,
                    day_index=int(day_index),
                    date=date,
                    arm=arm,
                    pre_motivation=int(pre) if pre else None,
                    post_motivation=int(post) if post else None,
                    selected_offset=float(offset) if offset else None,
                    previews=[int(i) for i in previews.split(";") if i],
                    steps=int(steps) if steps else None,
                    wear={"true": True, "false": False}.get(wear),
                    reward=float(reward) if reward else None,
                    finalized=bool(reward),
                )
            )
    return rows


def load_truth(path: str | Path) -> dict[str, float]:
    """Read participant preference scores from a truth CSV."""
    path = Path(path)
    truth: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "participant_id" not in reader.fieldnames:
            raise ValidationError(f"truth file {path} needs a participant_id column")
        score_col = "theta" if "theta" in reader.fieldnames else "preference"
        if score_col not in reader.fieldnames:
            raise ValidationError(f"truth file {path} needs a theta or preference column")
        for record in reader:
            truth[record["participant_id"]] = float(record[score_col])
    return truth
