"""Operator entry point: serve sessions, run batches, replay logs.

Batch evaluation is flag-driven so it scripts cleanly; the service
accepts a JSON config file because deployments live in config
management. Every subcommand fails with a one-line diagnostic and a
nonzero exit code.
"""
from __future__ import annotations

import json
import pathlib
import socket
from urllib.parse import urlparse

import click

from .advisor import AdvisorConfig, AdvisorError
from .evaluation import (
    EVAL_TICK_LIMIT,
    EvaluationError,
    render_figures,
    run_batch,
)
from .loop import LoopError, SessionConfig
from .replay import ReplayError, replay_file

_CONFIG_ERRORS = (LoopError, AdvisorError, ValueError, KeyError, TypeError)


def _load_json_object(path: str) -> dict:
    try:
        document = json.loads(pathlib.Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"unreadable config {path}: {exc}")
    if not isinstance(document, dict):
        raise click.ClickException(f"config {path} must hold a JSON object")
    return document


def _advisor_config(backend: str | None, endpoint: str | None,
                    model: str | None, section: dict | None) -> AdvisorConfig:
    payload = dict(section or {})
    if backend:
        payload["backend"] = backend
    if endpoint:
        payload["endpoint"] = endpoint
    if model:
        payload["model"] = model
    try:
        advisor = (AdvisorConfig.from_dict(payload) if payload
                   else AdvisorConfig())
    except _CONFIG_ERRORS as exc:
        raise click.ClickException(f"invalid advisor config: {exc}")
    if advisor.backend == "http":
        scheme = urlparse(advisor.endpoint).scheme
        if scheme not in ("http", "https"):
            raise click.ClickException(
                "advisor endpoint must be an http(s) URL, "
                f"got {advisor.endpoint!r}")
    return advisor


def _parse_difficulties(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(
            f"--difficulty takes a level, a comma list, or A..B; "
            f"got {text!r}")
    if not values:
        raise click.UsageError("--difficulty selects no levels")
    return values


@click.group()
@click.version_option(package_name="commandpost")
def main() -> None:
    """Steerable RTS sessions: serve, evaluate, replay, validate."""


@main.command()
@click.option("--host", default=None, help="Listen address  [default: 127.0.0.1]")
@click.option("--port", default=None, type=int, help="Listen port  [default: 8000]")
@click.option("--log-dir", default=None, type=click.Path(file_okay=False),
              help="Directory that receives episode logs (JSONL).")
@click.option("--advisor", "backend",
              type=click.Choice(["scripted", "http"]), default=None,
              help="Default advisor backend for new sessions.")
@click.option("--endpoint", default=None,
              help="Chat-completion URL for the http advisor.")
@click.option("--model", default=None, help="Model name for the http advisor.")
@click.option("--mode", type=click.Choice(["lockstep", "realtime"]),
              default=None,
              help="Default mode for sessions that do not name one.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON service config; flags override its fields.")
def serve(host: str | None, port: int | None, log_dir: str | None,
          backend: str | None, endpoint: str | None, model: str | None,
          mode: str | None, config_path: str | None) -> None:
    """Run the session service until interrupted."""
    document = _load_json_object(config_path) if config_path else {}
    advisor = _advisor_config(backend, endpoint, model,
                              document.get("advisor"))
    host = host or str(document.get("host", "127.0.0.1"))
    port = int(port if port is not None else document.get("port", 8000))
    log_dir = log_dir or document.get("log_dir")
    mode = mode or document.get("mode")
    if mode not in (None, "lockstep", "realtime"):
        raise click.ClickException(f"mode must be lockstep or realtime, "
                                   f"got {mode!r}")
    probe = socket.socket()
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise click.ClickException(f"cannot bind {host}:{port}: {exc}")
    finally:
        probe.close()

    import uvicorn

    from .service import create_app

    app = create_app(log_dir=log_dir, default_advisor=advisor,
                     default_mode=mode)
    click.echo(f"serving on {host}:{port} "
               f"(advisor={advisor.backend}, log_dir={log_dir or 'none'})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("eval")
@click.option("--policy", "policies", multiple=True,
              default=("balanced_macro",), show_default=True,
              help="Player policy preset; repeatable.")
@click.option("--difficulty", default="1..6", show_default=True,
              help="Opponent level, a comma list, or an inclusive A..B range.")
@click.option("--seeds", default=20, show_default=True, type=int,
              help="Seed count; episodes run seeds 0..N-1.")
@click.option("--seed", "explicit_seeds", multiple=True, type=int,
              help="Explicit seed; repeatable, overrides --seeds.")
@click.option("--out", "out_dir", default="eval-report", show_default=True,
              type=click.Path(file_okay=False),
              help="Report directory (CSV, text, figures).")
@click.option("--tick-limit", default=EVAL_TICK_LIMIT, show_default=True,
              type=int, help="Tick cap per episode; cap hits score as draws.")
@click.option("--jobs", default=4, show_default=True, type=int,
              help="Parallel episodes.")
@click.option("--skip-instructions", is_flag=True,
              help="Skip the instruction-following score.")
def eval_cmd(policies: tuple[str, ...], difficulty: str, seeds: int,
             explicit_seeds: tuple[int, ...], out_dir: str, tick_limit: int,
             jobs: int, skip_instructions: bool) -> None:
    """Headless win-rate ladder; writes CSV, text, and figures."""
    if explicit_seeds:
        seed_list = list(explicit_seeds)
    else:
        if seeds <= 0:
            raise click.UsageError("--seeds must be a positive count")
        seed_list = list(range(seeds))
    difficulties = _parse_difficulties(difficulty)
    try:
        report = run_batch(list(policies), difficulties, seed_list,
                           tick_limit=tick_limit,
                           score_instructions=not skip_instructions,
                           max_workers=jobs)
    except EvaluationError as exc:
        raise click.ClickException(str(exc))
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    text_path = out / "report.txt"
    csv_path.write_text(report.to_csv())
    text_path.write_text(report.to_text())
    figure_paths = render_figures(report, str(out))
    click.echo(report.to_text())
    for path in [str(csv_path), str(text_path), *figure_paths]:
        click.echo(f"wrote {path}")


@main.command()
@click.argument("log_path", type=click.Path(exists=True, dir_okay=False))
def replay(log_path: str) -> None:
    """Re-run a session log and verify its per-tick state hashes."""
    try:
        report = replay_file(log_path)
    except (ReplayError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(report.summary())
    if not report.ok:
        raise SystemExit(1)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["session", "service"]),
              default="session", show_default=True,
              help="Document shape to check.")
def validate(config_path: str, kind: str) -> None:
    """Check a JSON config document and report the effective settings."""
    document = _load_json_object(config_path)
    if kind == "session":
        try:
            config = SessionConfig.from_dict(document)
        except _CONFIG_ERRORS as exc:
            raise click.ClickException(f"invalid session config: {exc}")
        click.echo(f"config OK: mode={config.mode} "
                   f"advisor={config.advisor.backend} "
                   f"difficulty={config.opponent_difficulty} "
                   f"policy={config.initial_policy}")
    else:
        advisor = _advisor_config(None, None, None, document.get("advisor"))
        mode = document.get("mode")
        if mode not in (None, "lockstep", "realtime"):
            raise click.ClickException(
                f"invalid service config: mode must be lockstep or "
                f"realtime, got {mode!r}")
        port = document.get("port", 8000)
        if not isinstance(port, int) or not 0 < port < 65536:
            raise click.ClickException(
                f"invalid service config: bad port {port!r}")
        click.echo(f"config OK: advisor={advisor.backend} "
                   f"log_dir={document.get('log_dir') or 'none'} "
                   f"port={port}")


if __name__ == "__main__":
    main()
