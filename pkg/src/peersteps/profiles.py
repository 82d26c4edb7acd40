"""Daily comparison-target profiles: step offsets, obfuscation, attributes.

Each day a participant sees four artificial profiles whose displayed steps
sit at fixed fractional offsets from the participant's own reference steps,
obfuscated by a small random factor. Non-step attributes are drawn from a
curated pool file so the profiles read as plausible people.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from random import Random

from .bandit import Arm
from .errors import ConfigError, DomainError

# Fractional step offsets per arm, smallest to largest.
OFFSET_TABLE: dict[Arm, tuple[float, float, float, float]] = {
    Arm.DOWN: (-0.40, -0.30, -0.20, -0.10),
    Arm.MIXED: (-0.20, -0.10, 0.10, 0.20),
    Arm.UP: (0.10, 0.20, 0.30, 0.40),
}

# Obfuscation half-width, as a fraction of the reference steps.
OBFUSCATION = 0.02

MIN_REFERENCE_STEPS = 100

_NAME_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_NAME_DIGITS = "0123456789"

LIST_FIELDS = (
    "sex",
    "profession",
    "preferred_activities",
    "hobbies",
    "exercise_location",
    "favorite_spot",
)
RANGE_FIELDS = ("age", "height_cm", "weight_kg", "gym_time_minutes", "average_distance_km")


def offsets_for_arm(arm: Arm) -> tuple[float, float, float, float]:
    """The four design offsets for an arm, e.g. down -> (-0.40, -0.30, -0.20, -0.10)."""
    return OFFSET_TABLE[arm]


@dataclass(slots=True)
class ProfileAttributes:
    """Non-step profile content shown in the overview and full-profile views."""

    age: int
    sex: str
    profession: str
    height_cm: int
    weight_kg: int
    gym_time_minutes: int
    preferred_activities: tuple[str, ...]
    hobbies: tuple[str, ...]
    exercise_location: str
    favorite_spot: str
    average_distance_km: float

    def as_dict(self) -> dict:
        return {
            "age": self.age,
            "sex": self.sex,
            "profession": self.profession,
            "height_cm": self.height_cm,
            "weight_kg": self.weight_kg,
            "gym_time_minutes": self.gym_time_minutes,
            "preferred_activities": list(self.preferred_activities),
            "hobbies": list(self.hobbies),
            "exercise_location": self.exercise_location,
            "favorite_spot": self.favorite_spot,
            "average_distance_km": self.average_distance_km,
        }


@dataclass(slots=True)
class ProfileCard:
    """One comparison target: neutral handle, displayed steps, true design offset."""

    card_id: str
    display_name: str
    displayed_steps: int
    true_offset: float
    attributes: ProfileAttributes

    def as_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "display_name": self.display_name,
            "displayed_steps": self.displayed_steps,
            "true_offset": self.true_offset,
            "attributes": self.attributes.as_dict(),
        }


@dataclass
class NumericRange:
    low: float
    high: float
    step: float = 1.0

    def __post_init__(self) -> None:
        self.count = int(round((self.high - self.low) / self.step)) + 1

    def sample(self, rng: Random) -> float:
        return self.low + int(rng.random() * self.count) * self.step


@dataclass
class AttributePool:
    """Curated value lists and numeric ranges backing attribute sampling."""

    lists: dict[str, list[str]] = field(default_factory=dict)
    ranges: dict[str, NumericRange] = field(default_factory=dict)
    validated: bool = False

    def validate(self) -> None:
        for name in LIST_FIELDS:
            if not self.lists.get(name):
                raise ConfigError(f"attribute pool is missing values for [{name}]")
        for name in RANGE_FIELDS:
            if name not in self.ranges:
                raise ConfigError(f"attribute pool is missing a range for [{name}]")
        self.validated = True


def parse_pool(text: str) -> AttributePool:
    """Parse the sectioned plain-text pool format (see data/attribute_pool.txt)."""
    pool = AttributePool()
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if section is None:
            raise ConfigError(f"pool line {lineno}: value before any [section] header")
        if line.startswith("range "):
            parts = line.split()
            if len(parts) not in (3, 4):
                raise ConfigError(f"pool line {lineno}: range needs 'range LOW HIGH [STEP]'")
            try:
                low, high = float(parts[1]), float(parts[2])
                step = float(parts[3]) if len(parts) == 4 else 1.0
            except ValueError:
                raise ConfigError(f"pool line {lineno}: non-numeric range bound") from None
            if high < low or step <= 0:
                raise ConfigError(f"pool line {lineno}: invalid range bounds")
            pool.ranges[section] = NumericRange(low, high, step)
        else:
            pool.lists.setdefault(section, []).append(line)
    return pool


def load_pool(path: str | Path | None = None) -> AttributePool:
    """Load the packaged default pool, or a custom pool file."""
    if path is None:
        text = resources.files("peersteps.data").joinpath("attribute_pool.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    pool = parse_pool(text)
    pool.validate()
    return pool


_DEFAULT_POOL: AttributePool | None = None


def default_pool() -> AttributePool:
    global _DEFAULT_POOL
    if _DEFAULT_POOL is None:
        _DEFAULT_POOL = load_pool()
    return _DEFAULT_POOL


# Index draws below use int(rng.random() * n) rather than rng.randrange:
# the C-backed random() is ~10x cheaper and this module sits on the hot
# path of whole-study simulation.


def _pick_distinct(values: list[str], k: int, rng: Random) -> tuple[str, ...]:
    n = len(values)
    if k >= n:
        return tuple(values)
    random = rng.random
    first = int(random() * n)
    second = int(random() * n)
    while second == first:
        second = int(random() * n)
    if k == 2:
        return (values[first], values[second])
    third = int(random() * n)
    while third == first or third == second:
        third = int(random() * n)
    return (values[first], values[second], values[third])


def sample_attributes(rng: Random, pool: AttributePool) -> ProfileAttributes:
    """Draw one plausible attribute bundle from the pool."""
    if not pool.validated:
        pool.validate()
    lists, ranges = pool.lists, pool.ranges
    random = rng.random
    sexes = lists["sex"]
    professions = lists["profession"]
    locations = lists["exercise_location"]
    spots = lists["favorite_spot"]
    age_r = ranges["age"]
    height_r = ranges["height_cm"]
    weight_r = ranges["weight_kg"]
    gym_r = ranges["gym_time_minutes"]
    dist_r = ranges["average_distance_km"]
    # positional: field order matches the dataclass definition
    return ProfileAttributes(
        int(age_r.low + int(random() * age_r.count) * age_r.step),
        sexes[int(random() * len(sexes))],
        professions[int(random() * len(professions))],
        int(height_r.low + int(random() * height_r.count) * height_r.step),
        int(weight_r.low + int(random() * weight_r.count) * weight_r.step),
        int(gym_r.low + int(random() * gym_r.count) * gym_r.step),
        _pick_distinct(lists["preferred_activities"], 2 + int(random() * 2), rng),
        _pick_distinct(lists["hobbies"], 2 + int(random() * 2), rng),
        locations[int(random() * len(locations))],
        spots[int(random() * len(spots))],
        round(dist_r.low + int(random() * dist_r.count) * dist_r.step, 1),
    )


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _display_name(rng: Random) -> str:
    # One draw over the 26^3 * 10^2 name space, decoded positionally.
    n = int(rng.random() * 1_757_600)
    letters_code, digits = divmod(n, 100)
    first, rest = divmod(letters_code, 676)
    second, third = divmod(rest, 26)
    return (
        _NAME_LETTERS[first] + _NAME_LETTERS[second] + _NAME_LETTERS[third] + f"{digits:02d}"
    )


def _obfuscated_steps(ref_steps: int, offset: float, rng: Random) -> int:
    # Multiplicative +/-2% noise, clamped so the recovered offset
    # (displayed/ref - 1) never strays more than 0.02 from the design offset.
    noise = rng.uniform(-OBFUSCATION, OBFUSCATION)
    raw = _round_half_up(ref_steps * (1 + offset) * (1 + noise))
    lo = math.ceil(ref_steps * (1 + offset - OBFUSCATION))
    hi = math.floor(ref_steps * (1 + offset + OBFUSCATION))
    return max(0, min(max(raw, lo), hi))


def generate_cards(
    arm: Arm,
    ref_steps: int,
    rng: Random,
    pool: AttributePool | None = None,
) -> list[ProfileCard]:
    """Build the day's four profile cards for an arm, in randomized order."""
    if ref_steps < MIN_REFERENCE_STEPS:
        raise DomainError(
            f"reference steps below wear threshold ({ref_steps} < {MIN_REFERENCE_STEPS}); "
            "substitute the fallback reference first"
        )
    pool = pool or default_pool()
    if not pool.validated:
        pool.validate()

    names: set[str] = set()
    cards: list[ProfileCard] = []
    for offset in OFFSET_TABLE[arm]:
        name = _display_name(rng)
        while name in names:
            name = _display_name(rng)
        names.add(name)
        cards.append(
            ProfileCard(
                card_id=f"c{rng.getrandbits(32):08x}",
                display_name=name,
                displayed_steps=_obfuscated_steps(ref_steps, offset, rng),
                true_offset=offset,
                attributes=sample_attributes(rng, pool),
            )
        )
    # Fisher-Yates on four cards, using the cheap draw.
    random = rng.random
    for i in (3, 2, 1):
        j = int(random() * (i + 1))
        cards[i], cards[j] = cards[j], cards[i]
    return cards
