"""Simulated users: population sampling, behavior models, whole-study runs."""
import math
from random import Random

import pytest

from peersteps.bandit import Arm
from peersteps.errors import DomainError
from peersteps.profiles import generate_cards
from peersteps.protocol import StudyConfig
from peersteps.sim import (
    BimodalTheta,
    PointTheta,
    PopulationSpec,
    SimUser,
    UniformTheta,
    population_spec_from_dict,
    run_study,
    sample_population,
    sim_choose_card,
    sim_daily_steps,
    sim_motivation,
)


def make_user(**overrides):
    fields = dict(
        user_id="u001",
        theta=1.0,
        tau=0.05,
        alpha=2.0,
        beta=0.3,
        base_steps=6000.0,
        step_noise_sigma=0.1,
        gender="female",
        adherence=1.0,
    )
    fields.update(overrides)
    return SimUser(**fields)


# --- population sampling ------------------------------------------------------


def test_point_distribution_is_constant():
    spec = PopulationSpec(n_users=10, theta=PointTheta(1.0), seed=4)
    users = sample_population(spec)
    assert len(users) == 10
    assert all(u.theta == 1.0 for u in users)


def test_bimodal_mean_is_near_zero():
    spec = PopulationSpec(n_users=10_000, theta=BimodalTheta(0.8, 0.5), seed=1)
    users = sample_population(spec)
    mean_theta = sum(u.theta for u in users) / len(users)
    assert abs(mean_theta) <= 0.03
    assert {abs(u.theta) for u in users} == {0.8}


def test_same_seed_reproduces_population():
    spec = PopulationSpec(n_users=50, theta=UniformTheta(), seed=77)
    a = sample_population(spec)
    b = sample_population(spec)
    assert a == b


def test_invalid_user_parameters_rejected():
    with pytest.raises(DomainError):
        make_user(theta=1.5)
    with pytest.raises(DomainError):
        make_user(tau=0.0)
    with pytest.raises(DomainError):
        make_user(adherence=1.2)
    with pytest.raises(DomainError):
        PopulationSpec(n_users=0)


def test_population_spec_from_dict():
    spec = population_spec_from_dict(
        {
            "n_users": 5,
            "theta": {"kind": "point", "value": -0.5},
            "tau": [0.01, 0.1],
            "base_steps": 5000,
            "seed": 9,
        }
    )
    assert spec.n_users == 5
    assert spec.theta == PointTheta(-0.5)
    assert spec.tau == (0.01, 0.1)
    assert spec.base_steps == 5000.0


# --- card choice ---------------------------------------------------------------


def test_zero_temperature_upward_comparer_picks_plus_twenty():
    user = make_user(theta=1.0, tau=1e-9)
    cards = generate_cards(Arm.MIXED, 8000, Random(2))
    rng = Random(3)
    for _ in range(20):
        chosen = cards[sim_choose_card(user, cards, rng)]
        assert chosen.true_offset == 0.20


def test_zero_temperature_downward_comparer_picks_minus_twenty():
    user = make_user(theta=-1.0, tau=1e-9)
    cards = generate_cards(Arm.MIXED, 8000, Random(2))
    rng = Random(3)
    for _ in range(20):
        assert cards[sim_choose_card(user, cards, rng)].true_offset == -0.20


def test_choice_frequencies_match_softmax():
    # theta=0, tau=0.05 on the upward card set: weights exp(-|o|/tau).
    user = make_user(theta=0.0, tau=0.05)
    cards = generate_cards(Arm.UP, 8000, Random(4))
    order = [c.true_offset for c in cards]
    weights = {o: math.exp(-(abs(o) - 0.10) / 0.05) for o in order}
    total = sum(weights.values())
    rng = Random(8)
    n = 40_000
    counts = {o: 0 for o in order}
    for _ in range(n):
        counts[cards[sim_choose_card(user, cards, rng)].true_offset] += 1
    for offset in order:
        assert counts[offset] / n == pytest.approx(weights[offset] / total, abs=0.01)


# --- motivation ------------------------------------------------------------------


def test_unresponsive_user_has_zero_mean_shift():
    user = make_user(alpha=0.0)
    rng = Random(5)
    deltas = [
        post - pre for pre, post in (sim_motivation(user, Arm.UP, rng) for _ in range(10_000))
    ]
    assert abs(sum(deltas) / len(deltas)) <= 0.05


def test_responsive_upward_user_gains_motivation():
    user = make_user(theta=1.0, alpha=2.0)
    rng = Random(6)
    deltas = [
        post - pre for pre, post in (sim_motivation(user, Arm.UP, rng) for _ in range(10_000))
    ]
    assert sum(deltas) / len(deltas) >= 1.0


def test_motivation_outputs_stay_on_scale():
    user = make_user(theta=-1.0, alpha=4.0)
    rng = Random(7)
    for _ in range(2000):
        pre, post = sim_motivation(user, Arm.DOWN, rng)
        assert 1 <= pre <= 5 and 1 <= post <= 5


# --- daily steps -------------------------------------------------------------------


def test_noiseless_neutral_steps_equal_base():
    user = make_user(beta=0.0, step_noise_sigma=0.0)
    assert sim_daily_steps(user, Arm.MIXED, Random(1)) == 6000


def test_arm_effect_scales_base():
    user = make_user(theta=1.0, beta=0.1, step_noise_sigma=0.0)
    assert sim_daily_steps(user, Arm.UP, Random(1)) == 6600


def test_lognormal_mean_identity():
    sigma = 0.15
    user = make_user(beta=0.0, step_noise_sigma=sigma)
    rng = Random(9)
    n = 10_000
    mean = sum(sim_daily_steps(user, Arm.MIXED, rng) for _ in range(n)) / n
    expected = 6000 * math.exp(sigma * sigma / 2)
    assert abs(mean - expected) / expected <= 0.02


# --- whole-study harness --------------------------------------------------------------


def test_two_fully_adherent_users_produce_42_sessions():
    run = run_study(StudyConfig(seed=1), PopulationSpec(n_users=2, seed=2))
    assert run.sessions_finalized == 42
    kinds = [e.kind for e in run.event_store.all_events()]
    assert kinds.count("finalized") == 42
    assert kinds.count("enrolled") == 2


def test_zero_adherence_produces_enrollments_only():
    spec = PopulationSpec(n_users=3, adherence=0.0, seed=2)
    run = run_study(StudyConfig(seed=1), spec)
    assert run.sessions_finalized == 0
    assert {e.kind for e in run.event_store.all_events()} == {"enrolled"}


def test_partial_adherence_respects_calendar_window():
    spec = PopulationSpec(n_users=4, adherence=0.75, seed=3)
    run = run_study(StudyConfig(seed=2), spec)
    for model in run.engine.participants.values():
        assert model.day_counter <= 21
    # 28-day window at 75% adherence completes most but not all data days
    assert 0 < run.sessions_finalized <= 84


def test_same_seeds_reproduce_byte_identical_exports(tmp_path):
    outs = []
    for tag in ("a", "b"):
        run = run_study(StudyConfig(seed=31), PopulationSpec(n_users=3, seed=32))
        path = tmp_path / f"{tag}.csv"
        run.event_store.export_csv("sessions", path)
        log = tmp_path / f"{tag}.jsonl"
        run.event_store.save_jsonl(log)
        outs.append((path.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]


def test_baseline_exposure_is_balanced_for_both_conditions():
    run = run_study(StudyConfig(seed=4), PopulationSpec(n_users=6, seed=5))
    from peersteps.events import fold_sessions

    rows = fold_sessions(run.event_store.all_events())
    for pid in run.engine.participants:
        baseline_arms = [r.arm for r in rows if r.participant_id == pid and r.day_index <= 9]
        assert sorted(baseline_arms).count("down") == 3
        assert sorted(baseline_arms).count("mixed") == 3
        assert sorted(baseline_arms).count("up") == 3


def test_ground_truth_recorded_per_participant():
    run = run_study(StudyConfig(seed=6), PopulationSpec(n_users=4, seed=7))
    assert set(run.truth) == set(run.engine.participants)
    assert all(-1.0 <= theta <= 1.0 for theta in run.truth.values())


def test_completed_study_rejects_further_sessions():
    from datetime import date

    from peersteps.errors import ConflictError

    run = run_study(StudyConfig(seed=14), PopulationSpec(n_users=1, seed=15))
    (pid,) = run.engine.participants
    assert run.engine.participants[pid].day_counter == 21
    with pytest.raises(ConflictError):
        run.engine.start_session(pid, date(2025, 6, 1))
