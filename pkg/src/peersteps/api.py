"""HTTP surface for the study platform.

Thin handlers over the StudyEngine: every mutation appends to the event
store before the response is acknowledged, reads never mutate. Errors map
to {code, message, detail} bodies with NotFound=404, Validation=422, and
Conflict/Sequencing=409.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .analysis import build_report
from .errors import (
    ConflictError,
    DomainError,
    NotFoundError,
    PeerStepsError,
    SequencingError,
    ValidationError,
)
from .events import EventStore, fold_sessions
from .protocol import EpsilonGreedyStrategy, RewardWeights, StudyConfig, Ucb1Strategy
from .service import StudyEngine

ERROR_STATUS = {
    "NotFound": 404,
    "Conflict": 409,
    "Sequencing": 409,
    "Validation": 422,
    "Internal": 500,
}


def error_code(exc: PeerStepsError) -> str:
    if isinstance(exc, NotFoundError):
        return "NotFound"
    if isinstance(exc, ConflictError):
        return "Conflict"
    if isinstance(exc, SequencingError):
        return "Sequencing"
    if isinstance(exc, (ValidationError, DomainError)):
        return "Validation"
    return "Internal"


@dataclass
class ServiceConfig:
    """Deployment settings: file locations, auth token, study parameters."""

    port: int = 8000
    data_dir: str = "./data"
    token: str | None = None
    study: StudyConfig = StudyConfig()

    @classmethod
    def from_file(cls, path: str | Path | None, env: dict | None = None) -> "ServiceConfig":
        """Load JSON config with environment overrides (PEERSTEPS_*)."""
        env = os.environ if env is None else env
        raw: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text("utf-8"))
        study = study_config_from_dict(raw.get("study", {}))
        config = cls(
            port=int(raw.get("port", 8000)),
            data_dir=str(raw.get("data_dir", "./data")),
            token=raw.get("token"),
            study=study,
        )
        if "PEERSTEPS_PORT" in env:
            config.port = int(env["PEERSTEPS_PORT"])
        if "PEERSTEPS_DATA_DIR" in env:
            config.data_dir = env["PEERSTEPS_DATA_DIR"]
        if "PEERSTEPS_TOKEN" in env:
            config.token = env["PEERSTEPS_TOKEN"] or None
        if "PEERSTEPS_SEED" in env:
            config.study = replace_seed(config.study, int(env["PEERSTEPS_SEED"]))
        return config


def study_config_from_dict(raw: dict) -> StudyConfig:
    """Build a StudyConfig from the JSON study-config schema."""
    strategy_raw = raw.get("strategy", {})
    kind = strategy_raw.get("kind", "ucb1")
    if kind == "ucb1":
        strategy = Ucb1Strategy(float(strategy_raw.get("exploration_c", 0.5)))
    elif kind == "epsilon_greedy":
        strategy = EpsilonGreedyStrategy(float(strategy_raw.get("epsilon", 0.1)))
    else:
        raise ValidationError(f"unknown strategy kind {kind!r}")
    weights_raw = raw.get("weights", {})
    weights = RewardWeights(
        motivation=float(weights_raw.get("motivation", 0.5)),
        steps=float(weights_raw.get("steps", 0.5)),
    )
    return StudyConfig(
        baseline_days=int(raw.get("baseline_days", 9)),
        total_days=int(raw.get("total_days", 21)),
        non_wear_threshold=int(raw.get("non_wear_threshold", 100)),
        default_baseline_steps=int(raw.get("default_baseline_steps", 6000)),
        weights=weights,
        strategy=strategy,
        likert_min=int(raw.get("likert_min", 1)),
        likert_max=int(raw.get("likert_max", 5)),
        seed=int(raw.get("seed", 0)),
        cold_start=bool(raw.get("cold_start", False)),
    )


def replace_seed(config: StudyConfig, seed: int) -> StudyConfig:
    from dataclasses import replace

    return replace(config, seed=seed)


# --- request bodies ---------------------------------------------------------


class EnrollBody(BaseModel):
    external_id: str = Field(min_length=1)
    gender: str


class StepsBody(BaseModel):
    date: Date
    steps: int


class SessionBody(BaseModel):
    date: Date


class MotivationBody(BaseModel):
    value: int


class CardBody(BaseModel):
    card_id: str


class UnlockBody(BaseModel):
    section: str


# --- app assembly -------------------------------------------------------------


def create_app(
    service_config: ServiceConfig | None = None,
    engine: StudyEngine | None = None,
) -> FastAPI:
    """Wire the engine behind the versioned endpoint table."""
    service_config = service_config or ServiceConfig()
    if engine is None:
        data_dir = Path(service_config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        store = EventStore(data_dir / "events.jsonl")
        engine = StudyEngine(service_config.study, event_store=store)

    app = FastAPI(title="peersteps", version="0.1.0")
    app.state.engine = engine
    app.state.config = service_config

    async def check_token(request: Request) -> None:
        token = service_config.token
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid or missing bearer token")

    @app.exception_handler(PeerStepsError)
    async def handle_domain_error(request: Request, exc: PeerStepsError):
        code = error_code(exc)
        return JSONResponse(
            status_code=ERROR_STATUS[code],
            content={"code": code, "message": str(exc), "detail": {"type": type(exc).__name__}},
        )

    guarded = [Depends(check_token)]

    @app.post("/v1/participants", status_code=201, dependencies=guarded)
    def enroll(body: EnrollBody):
        model = engine.enroll(body.external_id, body.gender)
        return {"participant_id": model.participant_id, "condition": model.condition.value}

    @app.post("/v1/participants/{pid}/steps", status_code=202, dependencies=guarded)
    def ingest_steps(pid: str, body: StepsBody):
        result = engine.ingest_steps(pid, body.date, body.steps)
        return {
            "participant_id": pid,
            "date": body.date.isoformat(),
            "steps": result.steps,
            "overwrote": result.overwrote,
            "finalized_session_id": result.finalized_session_id,
        }

    @app.post("/v1/participants/{pid}/sessions", status_code=201, dependencies=guarded)
    def start_session(pid: str, body: SessionBody):
        session = engine.start_session(pid, body.date)
        return {"session_id": session.session_id, "day_index": session.day_index}

    @app.post("/v1/sessions/{sid}/motivation/pre", dependencies=guarded)
    def pre_motivation(sid: str, body: MotivationBody):
        session = engine.record_pre_motivation(sid, body.value)
        return {"session_id": sid, "state": session.state.value}

    @app.get("/v1/sessions/{sid}/cards", dependencies=guarded)
    def get_cards(sid: str):
        cards = engine.issue_cards(sid)
        session = engine.get_session(sid)
        return {
            "session_id": sid,
            "reference_steps": session.reference_steps,
            "cards": [
                {
                    "card_id": card.card_id,
                    "display_name": card.display_name,
                    "displayed_steps": card.displayed_steps,
                }
                for card in cards
            ],
        }

    @app.post("/v1/sessions/{sid}/preview", dependencies=guarded)
    def preview(sid: str, body: CardBody):
        session = engine.preview(sid, body.card_id)
        return {"session_id": sid, "previews": len(session.previews)}

    @app.post("/v1/sessions/{sid}/select", dependencies=guarded)
    def select(sid: str, body: CardBody):
        card = engine.select(sid, body.card_id)
        return {"session_id": sid, "card": card.as_dict()}

    @app.post("/v1/sessions/{sid}/unlock", dependencies=guarded)
    def unlock(sid: str, body: UnlockBody):
        session = engine.unlock(sid, body.section)
        return {"session_id": sid, "unlocked": [section for section, _ in session.unlock_events]}

    @app.post("/v1/sessions/{sid}/motivation/post", dependencies=guarded)
    def post_motivation(sid: str, body: MotivationBody):
        session = engine.record_post_motivation(sid, body.value)
        return {"session_id": sid, "state": session.state.value}

    @app.get("/v1/analysis/report", dependencies=guarded)
    def analysis_report():
        rows = fold_sessions(engine.events.all_events())
        report = build_report(
            rows,
            truth=None,
            baseline_days=engine.config.baseline_days,
        )
        return report.as_dict()

    return app
