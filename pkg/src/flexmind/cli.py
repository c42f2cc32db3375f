"""The flexmind command line: serve, run, replay, verify, fixture."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .engine import IdeationEngine
from .graph import check_invariants, normalize_name
from .orchestrator import GenerationConfig, ParseError, op_kind_from_name, parse_reply
from .providers import (
    HttpChatProvider,
    MockProvider,
    bundled_fixtures_dir,
    fixture_key,
)
from .store import (
    DATA_DIR_ENV,
    CorruptLogError,
    EventStore,
    NotFoundError,
    StorageError,
    read_log_file,
    replay,
)

DEFAULT_DATA_DIR = Path.home() / ".flexmind"
DEFAULT_LISTEN = "127.0.0.1:8787"


def bundled_scripts_dir() -> Path:
    return Path(__file__).resolve().parent / "scripts"


def _provider_options(fn):
    for option in reversed(
        [
            click.option(
                "--provider",
                "provider_name",
                type=click.Choice(["http", "mock"]),
                default="mock",
                show_default=True,
                help="Completion backend.",
            ),
            click.option(
                "--fixtures",
                type=click.Path(path_type=Path),
                default=None,
                help="Mock fixture directory (defaults to the bundled set).",
            ),
            click.option("--model", default=None, help="Model name for the http provider."),
            click.option(
                "--base-url",
                default="https://api.openai.com/v1",
                show_default=True,
                help="Chat-completion base URL for the http provider.",
            ),
            click.option(
                "--timeout-secs",
                type=float,
                default=60.0,
                show_default=True,
                help="Provider call timeout.",
            ),
        ]
    ):
        fn = option(fn)
    return fn


def _data_dir_option(fn):
    return click.option(
        "--data-dir",
        type=click.Path(path_type=Path),
        envvar=DATA_DIR_ENV,
        default=DEFAULT_DATA_DIR,
        show_default=True,
        help="Session log directory.",
    )(fn)


def _build_provider(provider_name: str, fixtures: Path | None, base_url: str, timeout_secs: float):
    if provider_name == "mock":
        return MockProvider(fixtures or bundled_fixtures_dir())
    return HttpChatProvider(base_url, timeout=timeout_secs)


def _build_config(model: str | None, timeout_secs: float) -> GenerationConfig:
    base = GenerationConfig(provider_timeout=timeout_secs)
    if model:
        from dataclasses import replace

        base = replace(base, model_name=model)
    return base


@click.group()
def main():
    """Opt-in AI ideation sessions over a typed design-space graph."""


@main.command()
@click.option("--listen", default=DEFAULT_LISTEN, show_default=True, help="host:port to bind.")
@_data_dir_option
@_provider_options
@click.option("--debug-exchanges", is_flag=True, help="Write raw prompt/reply sidecar logs.")
def serve(listen, data_dir, provider_name, fixtures, model, base_url, timeout_secs, debug_exchanges):
    """Start the HTTP service (and the web UI, when built)."""
    import uvicorn

    from .service import create_app, default_static_dir

    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.BadParameter("--listen must look like 127.0.0.1:8787")
    engine = IdeationEngine(
        EventStore(data_dir),
        _build_provider(provider_name, fixtures, base_url, timeout_secs),
        _build_config(model, timeout_secs),
        debug_exchanges=debug_exchanges,
    )
    app = create_app(engine, static_dir=default_static_dir())
    uvicorn.run(app, host=host, port=int(port_text), log_level="info")


@main.command()
@click.argument("script", type=click.Path(path_type=Path))
@click.option("--json", "json_mode", is_flag=True, help="Emit the final snapshot as JSON on stdout.")
@_data_dir_option
@_provider_options
def run(script, json_mode, data_dir, provider_name, fixtures, model, base_url, timeout_secs):
    """Run a .fmscript file against an in-process engine (no HTTP).

    SCRIPT is a file path; names bundled with the package (for example
    walkthrough.fmscript) are found when no such file exists locally.
    """
    from .script import ScriptParseError, StepFailure, parse_script, run_steps
    from .engine import snapshot_to_wire

    path = script if script.is_file() else bundled_scripts_dir() / script.name
    if not path.is_file():
        click.echo(f"error: no script file {script}", err=True)
        sys.exit(2)
    try:
        steps = parse_script(path.read_text(encoding="utf-8"))
    except ScriptParseError as exc:
        click.echo(f"parse error at line {exc.line_no}: {exc}", err=True)
        sys.exit(2)

    engine = IdeationEngine(
        EventStore(data_dir),
        _build_provider(provider_name, fixtures, base_url, timeout_secs),
        _build_config(model, timeout_secs),
    )
    emit = (lambda line: click.echo(line, err=True)) if json_mode else click.echo
    try:
        snapshot = run_steps(steps, engine, emit)
    except StepFailure as exc:
        click.echo(f"step {exc.index} failed [{exc.code}]: {exc}", err=True)
        sys.exit(1)
    if json_mode:
        click.echo(json.dumps(snapshot_to_wire(snapshot), ensure_ascii=False))
    sys.exit(0)


@main.command("replay")
@click.argument("log", type=click.Path(path_type=Path))
def replay_cmd(log):
    """Fold a session log and print a snapshot summary."""
    _fold_log(log, verify=False)


@main.command()
@click.argument("log", type=click.Path(path_type=Path))
def verify(log):
    """Exit 0 iff the log folds cleanly and the graph passes every rule."""
    _fold_log(log, verify=True)


def _fold_log(log: Path, *, verify: bool):
    from .script import summarize

    try:
        events = read_log_file(log)
        snapshot = replay(events)
    except CorruptLogError as exc:
        where = f" (seq {exc.seq})" if exc.seq is not None else ""
        click.echo(f"corrupt log{where}: {exc}", err=True)
        sys.exit(1)
    except (NotFoundError, StorageError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if verify:
        violations = check_invariants(snapshot.graph)
        if violations:
            for violation in violations:
                click.echo(f"violation [{violation.rule}]: {violation.message}", err=True)
            sys.exit(1)
        click.echo(f"ok: {len(events)} events, {summarize(snapshot)}")
    else:
        click.echo(summarize(snapshot))
    sys.exit(0)


@main.group()
def fixture():
    """Manage mock fixture files."""


@fixture.command("new")
@click.argument("opkind")
@click.argument("seed_name")
@click.option("--from", "source", type=click.Path(path_type=Path), required=True,
              help="File holding the raw reply text.")
@click.option("--fixtures", type=click.Path(path_type=Path), default=Path("fixtures"),
              show_default=True, help="Fixture directory to write into.")
@click.option("--force", is_flag=True, help="Overwrite an existing fixture.")
def fixture_new(opkind, seed_name, source, fixtures, force):
    """Validate a raw reply and install it under the canonical key name."""
    try:
        op = op_kind_from_name(opkind)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if not source.is_file():
        click.echo(f"error: no such file {source}", err=True)
        sys.exit(1)
    raw = source.read_text(encoding="utf-8")
    try:
        parse_reply(op, raw)
    except ParseError as exc:
        click.echo(f"invalid reply [{type(exc).__name__} at {exc.path}]: {exc}", err=True)
        sys.exit(1)
    target = fixtures / f"{fixture_key(op.value, normalize_name(seed_name))}.txt"
    if target.exists() and not force:
        click.echo(f"error: {target} exists (use --force to overwrite)", err=True)
        sys.exit(1)
    fixtures.mkdir(parents=True, exist_ok=True)
    target.write_text(raw, encoding="utf-8")
    click.echo(f"wrote {target}")
    sys.exit(0)


if __name__ == "__main__":
    main()
