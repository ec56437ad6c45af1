"""Command-line interface: run, annotate, report, patch, preview, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from uxprobe.analyze import report_json, report_markdown
from uxprobe.annotate import annotate_experiment, load_issue_records
from uxprobe.errors import UXProbeError
from uxprobe.llm import build_gateway
from uxprobe.patch.engine import apply_patchset, parse_patchset
from uxprobe.personas import load_config
from uxprobe.refine import preview_replay
from uxprobe.simulate import run_experiment
from uxprobe.store import ExperimentStore, dump_json, load_experiment


def _llm_options(fn):
    fn = click.option(
        "--llm",
        default="mock",
        show_default=True,
        help="Provider: mock or openai (credentials via environment).",
    )(fn)
    fn = click.option(
        "--transcript",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Scripted transcript file for the mock provider.",
    )(fn)
    return fn


@click.group()
def main() -> None:
    """Simulated usability testing: simulate, annotate, analyze, fix, verify."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--experiment-id", default=None, help="Defaults to the out directory name.")
@click.option("--pool", default=1, show_default=True, help="Concurrent sessions.")
@_llm_options
def run(config_path, out_dir, experiment_id, pool, llm, transcript):
    """Run simulations for every persona x goal of a config."""
    config = load_config(config_path)
    out = Path(out_dir)
    experiment_id = experiment_id or out.name
    store = ExperimentStore.create(out, experiment_id, config)
    gateway = build_gateway(llm, transcript)
    traces = run_experiment(store, gateway, pool_size=pool)
    manifest = {
        "experiment_id": experiment_id,
        "runs": [
            {
                "run_id": t.run_id,
                "persona_id": t.persona_id,
                "goal_id": t.goal_id,
                "steps": len(t.steps),
                "success": t.terminal.success,
                "reason": t.terminal.reason,
            }
            for t in traces
        ],
    }
    click.echo(dump_json(manifest), nl=False)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--n-tags", default=None, type=int, help="Tag cap per step (config default).")
@click.option("--rounds", default=1, show_default=True)
@click.option("--threshold", default=-1.0, show_default=True)
@_llm_options
def annotate(run_dir, n_tags, rounds, threshold, llm, transcript):
    """Tag cached traces and detect usability issues."""
    store = load_experiment(run_dir)
    gateway = build_gateway(llm, transcript)
    summary = annotate_experiment(
        store, gateway, rounds=rounds, threshold=threshold, n_tags=n_tags
    )
    click.echo(dump_json(summary), nl=False)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="json")
@click.option("--out", "out_path", type=click.Path(), default=None)
def report(run_dir, fmt, out_path):
    """Emit the aggregated analysis report."""
    store = load_experiment(run_dir)
    if fmt == "json":
        text = dump_json(report_json(store))
    else:
        text = report_markdown(store)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--snapshot", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--patchset", "patchset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def patch(snapshot, patchset_path, out_path):
    """Apply a patchset file to an HTML snapshot (atomic)."""
    html = Path(snapshot).read_text(encoding="utf-8")
    patchset = parse_patchset(Path(patchset_path).read_text(encoding="utf-8"))
    result = apply_patchset(html, patchset)
    Path(out_path).write_text(result.html, encoding="utf-8")
    click.echo(
        dump_json(
            {
                "status": result.status,
                "failing_index": result.failing_index,
                "error": result.error,
                "diff_summary": result.diff_summary,
            }
        ),
        nl=False,
    )
    if result.status != "ok":
        sys.exit(1)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--issue", "issue_id", required=True)
@click.option(
    "--snapshot",
    required=True,
    help="Modified snapshot: a file path or an existing blob ref.",
)
@_llm_options
def preview(run_dir, issue_id, snapshot, llm, transcript):
    """Replay one recorded decision step against a modified snapshot."""
    store = load_experiment(run_dir)
    record = next((i for i in load_issue_records(store) if i.issue_id == issue_id), None)
    if record is None:
        raise click.ClickException(f"unknown issue {issue_id!r}")
    if Path(snapshot).is_file():
        ref = store.put_blob(Path(snapshot).read_text(encoding="utf-8"), ext="html")
    else:
        ref = snapshot
    gateway = build_gateway(llm, transcript)
    diff = preview_replay(store, record, ref, gateway)
    click.echo(dump_json(diff.to_json_dict()), nl=False)


@main.command()
@click.option("--port", default=8400, show_default=True)
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--ui", "ui_dir", type=click.Path(), default=None, help="Static UI directory.")
@click.option("--pool", default=2, show_default=True)
@_llm_options
def serve(port, data_dir, ui_dir, pool, llm, transcript):
    """Serve the HTTP API (and optionally the web UI) over a data directory."""
    import uvicorn

    from uxprobe.api import create_app

    gateway = build_gateway(llm, transcript)
    app = create_app(data_dir, gateway=gateway, pool_size=pool, ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


def entrypoint() -> None:  # pragma: no cover
    try:
        main(standalone_mode=True)
    except UXProbeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entrypoint()
