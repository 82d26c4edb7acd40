"""Hand-built session logs with exactly designed summary statistics.

Used by the analysis tests and the acceptance suite: the step fixture pins
the control/down/pre cell at mean 6869 over n=73 wear sessions, and the
motivation fixture pins the overall deltas at 97/5000 and 91/625.
"""
from peersteps.events import SessionRow

ARM_CYCLE = ("down", "mixed", "up")


def _row(pid, condition, day, arm, steps, pre=3, post=3, wear=None):
    if wear is None:
        wear = steps >= 100
    return SessionRow(
        participant_id=pid,
        condition=condition,
        day_index=day,
        date=f"2024-01-{day:02d}" if day <= 31 else "2024-02-01",
        arm=arm,
        pre_motivation=pre,
        post_motivation=post,
        selected_offset=-0.20 if arm == "down" else 0.10,
        previews=[1],
        steps=steps,
        wear=wear,
        reward=0.5,
        finalized=True,
    )


def step_table_fixture() -> list[SessionRow]:
    """25 full control participants plus one under-14 dropout.

    Baseline arms: days 1-3 down, 4-6 mixed, 7-9 up. Of the 75 down/pre
    sessions, two are non-wear (99 steps); the 73 wear sessions carry values
    symmetric around 6869, so the cell mean is exactly 6869. One mixed/pre
    session sits exactly at the 100-step wear boundary and one just below.
    """
    down_values = [6869] + [v for k in range(1, 37) for v in (6869 - k, 6869 + k)]
    assert len(down_values) == 73 and sum(down_values) == 73 * 6869

    rows = []
    down_slot = 0
    for i in range(1, 26):
        pid = f"c{i:03d}"
        for day in range(1, 22):
            if day <= 3:
                arm = "down"
            elif day <= 6:
                arm = "mixed"
            elif day <= 9:
                arm = "up"
            else:
                arm = ARM_CYCLE[(day - 10) % 3]
            if arm == "down" and day <= 9:
                if down_slot < 73:
                    steps = down_values[down_slot]
                else:
                    steps = 99  # the last two down/pre slots are non-wear days
                down_slot += 1
            elif arm == "mixed" and day <= 9:
                if pid == "c001" and day == 4:
                    steps = 100  # wear boundary: included
                elif pid == "c002" and day == 4:
                    steps = 99  # just below: excluded
                else:
                    steps = 6500
            elif day <= 9:
                steps = 7000
            else:
                steps = 6000
            rows.append(_row(pid, "control", day, arm, steps))
    # dropout with only 5 completed days: excluded from the tables entirely
    for day in range(1, 6):
        rows.append(_row("c026", "control", day, "down", 7777))
    return rows


def motivation_fixture_rows() -> list[SessionRow]:
    """Deltas designed so control averages 97/5000 and experimental 91/625."""
    rows = []
    control_sessions = 0
    for i in range(1, 251):  # 250 participants x 20 days = 5000 sessions
        pid = f"mc{i:03d}"
        for day in range(1, 21):
            delta_one = control_sessions < 97
            rows.append(
                _row(
                    pid,
                    "control",
                    day,
                    ARM_CYCLE[day % 3],
                    6000,
                    pre=3,
                    post=4 if delta_one else 3,
                )
            )
            control_sessions += 1
    exp_sessions = 0
    sizes = [17] + [16] * 38  # 17 + 38*16 = 625 sessions, all participants >= 14 days
    for i, size in enumerate(sizes, start=1):
        pid = f"me{i:03d}"
        for day in range(1, size + 1):
            delta_one = exp_sessions < 91
            rows.append(
                _row(
                    pid,
                    "experimental",
                    day,
                    ARM_CYCLE[day % 3],
                    6000,
                    pre=3,
                    post=4 if delta_one else 3,
                )
            )
            exp_sessions += 1
    assert control_sessions == 5000 and exp_sessions == 625
    return rows
