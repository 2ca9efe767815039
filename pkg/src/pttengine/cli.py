"""Terminal client for the engagement loop plus batch benchmark commands.

State persists between invocations: after every command the current
engagement is written to ``<session_dir>/current.json`` and, for scripted
backends, the script cursor to ``current.cursor`` so a replay continues where
the previous command stopped.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bench
from .config import CONFIG_ENV, EngineConfig, resolve_path
from .errors import EngineError
from .orchestrator import Engine
from .parsing import InputCategory

CATEGORY_CHOICES = [c.value for c in InputCategory]


def _fail(exc: EngineError) -> None:
    click.echo(json.dumps({"error": exc.kind, "message": str(exc)}), err=True)
    sys.exit(1)


class CliState:
    def __init__(self, config: EngineConfig):
        self.config = config
        self.session_dir = Path(config.session_dir)
        self.session_dir.mkdir(parents=True, exist_ok=True)
        self.current_path = self.session_dir / "current.json"
        self.cursor_path = self.session_dir / "current.cursor"

    def engine(self) -> Engine:
        offset = 0
        if self.config.backend_name == "scripted" and self.cursor_path.exists():
            offset = int(self.cursor_path.read_text().strip() or 0)
        return Engine(self.config, script_offset=offset)

    def load_current(self, engine: Engine):
        if not self.current_path.exists():
            raise EngineError("no active engagement; run `start` first")
        return engine.load_session(self.current_path)

    def persist(self, engine: Engine, session) -> None:
        engine.save_session(session, self.current_path)
        if engine.scripted is not None:
            self.cursor_path.write_text(str(engine.scripted.consumed))


@click.group()
@click.option("--config", "config_path", envvar=CONFIG_ENV, default=None,
              help="Path to a JSON engine config (or set PTT_CONFIG).")
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Interactive penetration-testing copilot."""
    try:
        config = EngineConfig.from_env_or_file(config_path)
    except EngineError as exc:
        _fail(exc)
    ctx.obj = CliState(config)


@main.command()
@click.argument("goal")
@click.argument("target")
@click.pass_obj
def start(state: CliState, goal: str, target: str):
    """Start a new engagement and print the initial task tree."""
    try:
        engine = state.engine()
        session = engine.start_engagement(goal, target)
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(session.reasoning.last_verified_text)


@main.command("next")
@click.pass_obj
def next_command(state: CliState):
    """Print the next concrete operation for the human tester."""
    try:
        engine = state.engine()
        session = state.load_current(engine)
        operation = engine.next_action(session)
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"[{operation.kind}]")
    click.echo(operation.content)


@main.command()
@click.option("--category", type=click.Choice(CATEGORY_CHOICES), required=True)
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Read the result from a file instead of stdin.")
@click.pass_obj
def submit(state: CliState, category: str, file_path: str | None):
    """Feed a testing result back into the engagement."""
    raw = Path(file_path).read_text(encoding="utf-8") if file_path else sys.stdin.read()
    try:
        engine = state.engine()
        session = state.load_current(engine)
        revision = engine.submit_result(session, category, raw)
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"revision {revision}")


@main.command()
@click.pass_obj
def tree(state: CliState):
    """Print the current task tree."""
    try:
        engine = state.engine()
        session = state.load_current(engine)
    except EngineError as exc:
        _fail(exc)
    click.echo(session.reasoning.last_verified_text)


@main.command()
@click.argument("question")
@click.pass_obj
def feedback(state: CliState, question: str):
    """Ask about the engagement without changing its state."""
    try:
        engine = state.engine()
        session = state.load_current(engine)
        answer = engine.feedback(session, question)
        # Feedback never changes persisted state, but the script cursor moved.
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(answer)


@main.command()
@click.argument("instruction")
@click.pass_obj
def revise(state: CliState, instruction: str):
    """Manually revise the task tree through the reasoning module."""
    try:
        engine = state.engine()
        session = state.load_current(engine)
        revision = engine.feedback_update(session, instruction)
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"revision {revision}")


@main.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.pass_obj
def save(state: CliState, path: str):
    """Save the current engagement to a file."""
    try:
        engine = state.engine()
        session = state.load_current(engine)
        engine.save_session(session, path)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"saved {session.id} to {path}")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def load(state: CliState, path: str):
    """Load an engagement file and make it current."""
    try:
        engine = state.engine()
        session = engine.load_session(path)
        state.persist(engine, session)
    except EngineError as exc:
        _fail(exc)
    click.echo(session.reasoning.last_verified_text)


@main.command()
@click.pass_obj
def serve(state: CliState):
    """Run the HTTP/SSE service for the web UI."""
    import uvicorn

    from .service import create_app

    try:
        engine = state.engine()
    except EngineError as exc:
        _fail(exc)
    app = create_app(engine)
    uvicorn.run(app, host=state.config.listen_host, port=state.config.listen_port)


@main.group(name="bench")
def bench_group():
    """Benchmark loading, scoring, and reporting."""


@bench_group.command("load")
@click.option("--in", "path", default="bundled:benchmark.json", show_default=True)
def bench_load(path: str):
    """Validate a benchmark definition and print its totals."""
    try:
        targets = bench.load_benchmark(resolve_path(path))
    except EngineError as exc:
        _fail(exc)
    subtasks = sum(len(t.sub_tasks) for t in targets)
    categories = {s.category for t in targets for s in t.sub_tasks}
    click.echo(f"{len(targets)} targets, {subtasks} sub-tasks, {len(categories)} categories")
    for difficulty in bench.DIFFICULTIES:
        bucket = [t for t in targets if t.difficulty == difficulty]
        click.echo(f"  {difficulty}: {len(bucket)} targets, "
                   f"{sum(len(t.sub_tasks) for t in bucket)} sub-tasks")


@bench_group.command("score")
@click.option("--targets", "targets_path", default="bundled:picomini_targets.json",
              show_default=True)
@click.option("--in", "records_path", default="bundled:picomini_records.json",
              show_default=True)
@click.option("--n", default=5, show_default=True, help="Best-of-N trial policy.")
def bench_score(targets_path: str, records_path: str, n: int):
    """Score CTF completion records against a target set."""
    try:
        targets = bench.load_benchmark(resolve_path(targets_path))
        _, records = bench.load_records(resolve_path(records_path))
        by_target: dict[str, list] = {}
        for record in records:
            by_target.setdefault(record.target_id, []).append(record)
        for target in targets:
            group = by_target.get(target.id, [])
            mark = "ok" if group and bench.best_of_n(group, n) else "x"
            click.echo(f"  [{mark}] {target.name} ({target.score_points})")
        total = bench.ctf_score(records, targets, n)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"total: {total}")


@bench_group.command("report")
@click.option("--in", "record_paths", multiple=True, required=True,
              help="Records file; repeat for several rows.")
@click.option("--targets", "targets_path", default="bundled:benchmark.json",
              show_default=True)
@click.option("--out", "out_path", default=None, help="Write CSV here instead of stdout.")
def bench_report(record_paths: tuple[str, ...], targets_path: str, out_path: str | None):
    """Compute difficulty-stratified completion metrics as CSV."""
    try:
        targets = bench.load_benchmark(resolve_path(targets_path))
        reports = []
        for path in record_paths:
            label, records = bench.load_records(resolve_path(path))
            reports.append((label, bench.compute_metrics(records, targets)))
        csv_text = bench.report_csv(reports)
    except EngineError as exc:
        _fail(exc)
    if out_path:
        Path(out_path).write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(csv_text, nl=False)


if __name__ == "__main__":
    main()
