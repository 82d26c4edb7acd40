"""Per-participant three-armed bandit: reward computation and arm selection.

The three arms name the direction of the daily comparison targets relative
to the participant's own steps: all lower (down), straddling (mixed), or all
higher (up). Rewards blend the pre/post motivation change with the day's
step count, both normalized to [0, 1].
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from random import Random

from .errors import DomainError


class Arm(enum.Enum):
    DOWN = "down"
    MIXED = "mixed"
    UP = "up"

    @property
    def direction(self) -> int:
        """Numeric direction code: down = -1, mixed = 0, up = +1."""
        return _DIRECTIONS[self]

    @classmethod
    def from_wire(cls, value: str) -> "Arm":
        try:
            return cls(value)
        except ValueError:
            raise DomainError(f"unknown arm {value!r}") from None


_DIRECTIONS = {Arm.DOWN: -1, Arm.MIXED: 0, Arm.UP: 1}

ARMS: tuple[Arm, Arm, Arm] = (Arm.DOWN, Arm.MIXED, Arm.UP)


@dataclass(slots=True)
class ArmStats:
    """Pull count and cumulative reward for one arm."""

    pulls: int = 0
    reward_sum: float = 0.0

    @property
    def mean(self) -> float:
        if self.pulls < 1:
            raise DomainError("mean undefined before the first pull")
        return self.reward_sum / self.pulls


@dataclass
class ArmStatsTable:
    """Three-entry pull/reward table, one row per arm."""

    rows: dict[Arm, ArmStats] = field(
        default_factory=lambda: {arm: ArmStats() for arm in ARMS}
    )

    @property
    def total_pulls(self) -> int:
        return sum(s.pulls for s in self.rows.values())

    def copy(self) -> "ArmStatsTable":
        return ArmStatsTable(
            {arm: ArmStats(s.pulls, s.reward_sum) for arm, s in self.rows.items()}
        )

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {
            arm.value: {"pulls": s.pulls, "reward_sum": s.reward_sum}
            for arm, s in self.rows.items()
        }

    @classmethod
    def from_dict(cls, data: dict[str, dict[str, float]]) -> "ArmStatsTable":
        table = cls()
        for key, row in data.items():
            stats = table.rows[Arm.from_wire(key)]
            stats.pulls = int(row["pulls"])
            stats.reward_sum = float(row["reward_sum"])
        return table


@dataclass(frozen=True)
class RewardWeights:
    """Relative weight of the motivation and step components; must sum to 1."""

    motivation: float = 0.5
    steps: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.motivation <= 1.0 and 0.0 <= self.steps <= 1.0):
            raise DomainError("reward weights must lie in [0, 1]")
        if abs(self.motivation + self.steps - 1.0) > 1e-9:
            raise DomainError("reward weights must sum to 1")


@dataclass(frozen=True, slots=True)
class Reward:
    """Scalar feedback for one arm pull, with its two components."""

    value: float
    motivation_component: float
    steps_component: float | None


def compute_reward(
    pre_motivation: int,
    post_motivation: int,
    steps: int | None,
    baseline_mean: float,
    weights: RewardWeights = RewardWeights(),
) -> Reward:
    """Combine the motivation change and the day's steps into a [0, 1] reward.

    The motivation delta (post - pre, range -4..+4) maps affinely onto [0, 1];
    steps are normalized by twice the baseline mean and capped at 1, so that
    doubling one's baseline saturates the component. On a non-wear day
    (steps is None) the reward is the motivation component alone at full
    weight.
    """
    for name, value in (("pre", pre_motivation), ("post", post_motivation)):
        if not isinstance(value, int) or not 1 <= value <= 5:
            raise DomainError(f"{name} motivation must be an integer in 1..5, got {value!r}")
    if baseline_mean <= 0:
        raise DomainError(f"baseline_mean must be positive, got {baseline_mean}")

    motivation = ((post_motivation - pre_motivation) + 4) / 8
    if steps is None:
        return Reward(value=motivation, motivation_component=motivation, steps_component=None)
    if steps < 0:
        raise DomainError(f"steps must be non-negative, got {steps}")
    step_part = min(steps / (2 * baseline_mean), 1.0)
    value = weights.motivation * motivation + weights.steps * step_part
    return Reward(value=value, motivation_component=motivation, steps_component=step_part)


def update_stats(stats: ArmStatsTable, arm: Arm, reward: Reward) -> ArmStatsTable:
    """Return a new table with one more pull of `arm` worth `reward.value`."""
    if not 0.0 <= reward.value <= 1.0:
        raise DomainError(f"reward value out of [0, 1]: {reward.value}")
    updated = stats.copy()
    row = updated.rows[arm]
    row.pulls += 1
    row.reward_sum += reward.value
    return updated


def ucb_scores(stats: ArmStatsTable, exploration_c: float) -> dict[Arm, float]:
    """UCB1 score per arm; requires every arm pulled at least once."""
    total = stats.total_pulls
    return {
        arm: s.mean + exploration_c * math.sqrt(2 * math.log(total) / s.pulls)
        for arm, s in stats.rows.items()
    }


def select_arm_ucb(stats: ArmStatsTable, exploration_c: float, rng: Random) -> Arm:
    """UCB1 selection: unpulled arms first, then argmax of mean + bonus.

    Ties (including among several unpulled arms) break uniformly at random
    through `rng` so that repeated runs stay reproducible.
    """
    if exploration_c <= 0:
        raise DomainError("exploration_c must be positive")
    unpulled = [arm for arm in ARMS if stats.rows[arm].pulls == 0]
    if unpulled:
        return unpulled[rng.randrange(len(unpulled))] if len(unpulled) > 1 else unpulled[0]
    scores = ucb_scores(stats, exploration_c)
    best = max(scores.values())
    candidates = [arm for arm in ARMS if scores[arm] == best]
    return candidates[rng.randrange(len(candidates))] if len(candidates) > 1 else candidates[0]


def select_arm_uniform(rng: Random) -> Arm:
    """Pick one of the three arms uniformly at random."""
    return ARMS[rng.randrange(3)]


def select_arm_epsilon_greedy(stats: ArmStatsTable, epsilon: float, rng: Random) -> Arm:
    """Epsilon-greedy alternative: explore uniformly with probability epsilon."""
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError("epsilon must lie in [0, 1]")
    unpulled = [arm for arm in ARMS if stats.rows[arm].pulls == 0]
    if unpulled:
        return unpulled[rng.randrange(len(unpulled))] if len(unpulled) > 1 else unpulled[0]
    if rng.random() < epsilon:
        return select_arm_uniform(rng)
    means = {arm: stats.rows[arm].mean for arm in ARMS}
    best = max(means.values())
    candidates = [arm for arm in ARMS if means[arm] == best]
    return candidates[rng.randrange(len(candidates))] if len(candidates) > 1 else candidates[0]
