"""Command-line entry point: simulate, analyze, serve, gen-profiles."""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from random import Random

import click

from .analysis import build_report, load_truth, sessions_from_csv
from .api import ServiceConfig, create_app, study_config_from_dict
from .bandit import Arm
from .errors import PeerStepsError
from .events import Event, fold_sessions
from .profiles import generate_cards
from .sim import population_spec_from_dict, run_study

ARM_NAMES = {"down": Arm.DOWN, "mixed": Arm.MIXED, "up": Arm.UP}


@click.group()
def main() -> None:
    """Adaptive social-comparison study platform."""


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text("utf-8"))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Study config JSON (defaults apply if omitted).")
@click.option("--population", "population_path", type=click.Path(exists=True), default=None,
              help="Population spec JSON (default: 48 responsive users).")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Output directory for the event log and CSV exports.")
@click.option("--seed", type=int, default=None,
              help="Override both config and population seeds.")
def simulate(config_path, population_path, out_dir, seed):
    """Run a simulated study and export its logs."""
    try:
        raw = _load_json(config_path)
        config = study_config_from_dict(raw.get("study", raw))
        spec = population_spec_from_dict(_load_json(population_path))
        if seed is not None:
            config = dataclasses.replace(config, seed=seed)
            spec = dataclasses.replace(spec, seed=seed)
        run = run_study(config, spec)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        store = run.event_store
        n_events = store.save_jsonl(out / "events.jsonl")
        n_sessions = store.export_csv("sessions", out / "sessions.csv")
        store.export_csv("steps", out / "steps.csv")
        store.export_csv("rewards", out / "rewards.csv")
        _write_truth(run, out / "truth.csv")
    except PeerStepsError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(
        f"simulated {len(run.users)} participants, {n_sessions} finalized sessions, "
        f"{n_events} events -> {out}"
    )


def _write_truth(run, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["participant_id", "external_id", "theta"])
        for pid in sorted(run.truth):
            external = run.engine.participants[pid].external_id
            writer.writerow([pid, external, repr(run.truth[pid])])


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True,
              help="Directory with events.jsonl (or sessions.csv), or either file directly.")
@click.option("--truth", "truth_path", type=click.Path(exists=True), default=None,
              help="Preference-score CSV for the correlation series.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Report JSON path; a .txt rendering is written alongside.")
def analyze(log_path, truth_path, out_path):
    """Compute the full analysis report over an exported log."""
    try:
        rows = _load_rows(Path(log_path))
        truth = load_truth(truth_path) if truth_path else None
        report = build_report(rows, truth=truth)
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.to_json(), encoding="utf-8")
        text_path = out.with_suffix(".txt") if out.suffix == ".json" else Path(str(out) + ".txt")
        text_path.write_text(report.render_text(), encoding="utf-8")
    except PeerStepsError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"report written to {out} and {text_path}")


def _load_rows(path: Path):
    if path.is_dir():
        events_file = path / "events.jsonl"
        if events_file.exists():
            return _rows_from_events(events_file)
        sessions_file = path / "sessions.csv"
        if sessions_file.exists():
            return sessions_from_csv(sessions_file)
        raise click.ClickException(f"no events.jsonl or sessions.csv in {path}")
    if path.suffix == ".jsonl":
        return _rows_from_events(path)
    return sessions_from_csv(path)


def _rows_from_events(path: Path):
    events = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(Event.from_json(line))
    return fold_sessions(events)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Service config JSON (port, data_dir, token, study).")
@click.option("--port", type=int, default=None, help="Override the listen port.")
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="Override the data directory for the event log.")
def serve(config_path, port, data_dir):
    """Run the HTTP service until interrupted."""
    import uvicorn

    try:
        service_config = ServiceConfig.from_file(config_path)
        if port is not None:
            service_config.port = port
        if data_dir is not None:
            service_config.data_dir = data_dir
        app = create_app(service_config)
    except PeerStepsError as exc:
        raise click.ClickException(str(exc)) from exc
    uvicorn.run(app, host="127.0.0.1", port=service_config.port)


@main.command("gen-profiles")
@click.option("--arm", type=click.Choice(["down", "mixed", "up"]), required=True)
@click.option("--ref-steps", type=int, required=True, help="Reference daily steps.")
@click.option("--seed", type=int, default=0)
def gen_profiles(arm, ref_steps, seed):
    """Print one day's four profile cards; debugging aid."""
    try:
        cards = generate_cards(ARM_NAMES[arm], ref_steps, Random(seed))
    except PeerStepsError as exc:
        raise click.ClickException(str(exc)) from exc
    for card in cards:
        attrs = card.attributes
        click.echo(
            f"{card.display_name}  steps={card.displayed_steps}  offset={card.true_offset:+.2f}  "
            f"{attrs.age}yo {attrs.sex} {attrs.profession}, gym {attrs.gym_time_minutes} min/wk, "
            f"likes {', '.join(attrs.preferred_activities)}"
        )


if __name__ == "__main__":
    main()
