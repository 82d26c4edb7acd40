"""Endpoint table behavior and transport equivalence."""
from datetime import date, datetime

import pytest
from fastapi.testclient import TestClient

from peersteps.api import ServiceConfig, create_app
from peersteps.events import EventStore
from peersteps.protocol import StudyConfig
from peersteps.service import SimClock, StudyEngine

CONFIG = StudyConfig(seed=42)


def make_engine(seed=42):
    return StudyEngine(
        StudyConfig(seed=seed),
        event_store=EventStore(),
        clock=SimClock(datetime(2024, 1, 10, 9, 0, 0)),
    )


@pytest.fixture()
def client():
    engine = make_engine()
    app = create_app(ServiceConfig(study=engine.config), engine=engine)
    with TestClient(app) as c:
        c.engine = engine
        yield c


def enroll(client, external_id="x1", gender="female"):
    response = client.post(
        "/v1/participants", json={"external_id": external_id, "gender": gender}
    )
    assert response.status_code == 201
    return response.json()


def start_session(client, pid, on="2024-01-10"):
    response = client.post(f"/v1/participants/{pid}/sessions", json={"date": on})
    assert response.status_code == 201
    return response.json()["session_id"]


def run_day(client, pid, on="2024-01-10", pre=3, post=4, steps=8000):
    sid = start_session(client, pid, on)
    assert client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": pre}).status_code == 200
    cards = client.get(f"/v1/sessions/{sid}/cards").json()["cards"]
    assert client.post(f"/v1/sessions/{sid}/preview", json={"card_id": cards[0]["card_id"]}).status_code == 200
    assert client.post(f"/v1/sessions/{sid}/select", json={"card_id": cards[0]["card_id"]}).status_code == 200
    assert client.post(f"/v1/sessions/{sid}/unlock", json={"section": "steps"}).status_code == 200
    assert client.post(f"/v1/sessions/{sid}/motivation/post", json={"value": post}).status_code == 200
    assert client.post(f"/v1/participants/{pid}/steps", json={"date": on, "steps": steps}).status_code == 202
    return sid


def test_enrollment_assigns_condition(client):
    body = enroll(client)
    assert body["participant_id"] == "p001"
    assert body["condition"] in ("control", "experimental")


def test_enrollment_rejects_unknown_gender(client):
    response = client.post(
        "/v1/participants", json={"external_id": "x", "gender": "dragon"}
    )
    assert response.status_code == 422
    assert response.json()["code"] == "Validation"


def test_duplicate_session_conflicts(client):
    pid = enroll(client)["participant_id"]
    start_session(client, pid)
    response = client.post(f"/v1/participants/{pid}/sessions", json={"date": "2024-01-10"})
    assert response.status_code == 409
    assert response.json()["code"] == "Conflict"


def test_pre_motivation_validation_and_repeat(client):
    pid = enroll(client)["participant_id"]
    sid = start_session(client, pid)
    assert (
        client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 9}).status_code == 422
    )
    assert client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3}).status_code == 200
    repeat = client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3})
    assert repeat.status_code == 409
    assert repeat.json()["code"] == "Sequencing"


def test_cards_require_pre_rating_then_idempotent(client):
    pid = enroll(client)["participant_id"]
    sid = start_session(client, pid)
    premature = client.get(f"/v1/sessions/{sid}/cards")
    assert premature.status_code == 409
    assert premature.json()["code"] == "Sequencing"

    client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3})
    first = client.get(f"/v1/sessions/{sid}/cards").json()
    events_after_first = len(client.engine.events.all_events())
    second = client.get(f"/v1/sessions/{sid}/cards").json()
    assert first == second
    assert len(client.engine.events.all_events()) == events_after_first  # read is pure
    assert len(first["cards"]) == 4
    assert first["reference_steps"] == 6000  # default before any wear day


def test_second_select_conflicts(client):
    pid = enroll(client)["participant_id"]
    sid = start_session(client, pid)
    client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3})
    cards = client.get(f"/v1/sessions/{sid}/cards").json()["cards"]
    first = client.post(f"/v1/sessions/{sid}/select", json={"card_id": cards[0]["card_id"]})
    assert first.status_code == 200
    assert "attributes" in first.json()["card"]  # full profile revealed
    again = client.post(f"/v1/sessions/{sid}/select", json={"card_id": cards[1]["card_id"]})
    assert again.status_code == 409
    assert again.json()["code"] == "Sequencing"


def test_unlock_requires_selection(client):
    pid = enroll(client)["participant_id"]
    sid = start_session(client, pid)
    client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3})
    client.get(f"/v1/sessions/{sid}/cards")
    response = client.post(f"/v1/sessions/{sid}/unlock", json={"section": "steps"})
    assert response.status_code == 409


def test_steps_ingestion_triggers_finalization(client):
    pid = enroll(client)["participant_id"]
    sid = run_day(client, pid)
    kinds = [e.kind for e in client.engine.events.all_events()]
    assert kinds[-1] == "finalized"
    response = client.post(
        f"/v1/participants/{pid}/steps", json={"date": "2024-01-10", "steps": 8100}
    )
    assert response.status_code == 202
    assert response.json()["overwrote"] == 8000
    assert response.json()["finalized_session_id"] is None  # already finalized


def test_steps_for_unknown_participant(client):
    response = client.post(
        "/v1/participants/p999/steps", json={"date": "2024-01-10", "steps": 100}
    )
    assert response.status_code == 404
    assert response.json()["code"] == "NotFound"


def test_negative_steps_rejected(client):
    pid = enroll(client)["participant_id"]
    response = client.post(
        f"/v1/participants/{pid}/steps", json={"date": "2024-01-10", "steps": -1}
    )
    assert response.status_code == 422


def test_unknown_session_is_404(client):
    assert client.get("/v1/sessions/ghost/cards").status_code == 404


def test_report_endpoint_is_pure_read(client):
    pid = enroll(client)["participant_id"]
    run_day(client, pid)
    before = len(client.engine.events.all_events())
    response = client.get("/v1/analysis/report")
    assert response.status_code == 200
    body = response.json()
    assert "exclusions" in body and "motivation_overall" in body
    assert len(client.engine.events.all_events()) == before


def test_bearer_token_enforced_when_configured():
    engine = make_engine()
    app = create_app(ServiceConfig(study=engine.config, token="sekrit"), engine=engine)
    with TestClient(app) as client:
        denied = client.post("/v1/participants", json={"external_id": "x", "gender": "female"})
        assert denied.status_code == 401
        allowed = client.post(
            "/v1/participants",
            json={"external_id": "x", "gender": "female"},
            headers={"Authorization": "Bearer sekrit"},
        )
        assert allowed.status_code == 201


def test_http_and_direct_calls_produce_identical_event_streams():
    # Same seed, same simulated clock: the HTTP transport must be a no-op
    # wrapper around the engine operations.
    engine_http = make_engine()
    app = create_app(ServiceConfig(study=engine_http.config), engine=engine_http)
    with TestClient(app) as client:
        client.post("/v1/participants", json={"external_id": "x1", "gender": "female"})
        sid = client.post("/v1/participants/p001/sessions", json={"date": "2024-01-10"}).json()[
            "session_id"
        ]
        client.post(f"/v1/sessions/{sid}/motivation/pre", json={"value": 3})
        cards = client.get(f"/v1/sessions/{sid}/cards").json()["cards"]
        client.post(f"/v1/sessions/{sid}/preview", json={"card_id": cards[1]["card_id"]})
        client.post(f"/v1/sessions/{sid}/select", json={"card_id": cards[1]["card_id"]})
        client.post(f"/v1/sessions/{sid}/unlock", json={"section": "steps"})
        client.post(f"/v1/sessions/{sid}/unlock", json={"section": "interests"})
        client.post(f"/v1/sessions/{sid}/motivation/post", json={"value": 5})
        client.post("/v1/participants/p001/steps", json={"date": "2024-01-10", "steps": 9000})

    engine_direct = make_engine()
    model = engine_direct.enroll("x1", "female")
    session = engine_direct.start_session(model.participant_id, date(2024, 1, 10))
    engine_direct.record_pre_motivation(session.session_id, 3)
    direct_cards = engine_direct.issue_cards(session.session_id)
    engine_direct.preview(session.session_id, direct_cards[1].card_id)
    engine_direct.select(session.session_id, direct_cards[1].card_id)
    engine_direct.unlock(session.session_id, "steps")
    engine_direct.unlock(session.session_id, "interests")
    engine_direct.record_post_motivation(session.session_id, 5)
    engine_direct.ingest_steps(model.participant_id, date(2024, 1, 10), 9000)

    http_stream = [e.to_json() for e in engine_http.events.all_events()]
    direct_stream = [e.to_json() for e in engine_direct.events.all_events()]
    assert http_stream == direct_stream
