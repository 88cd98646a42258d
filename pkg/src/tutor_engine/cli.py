"""``tutor`` command line: serve, cohort generate, experiment run, metrics fkrs."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .cohort import CohortSpec, cohort_to_json, generate_cohort, load_cohort
from .config import load_config
from .errors import NoProse
from .experiment import (
    ExperimentPlan,
    default_plan,
    export_report,
    run_experiment,
    scripted_fixture_backend,
)
from .gateway import Gateway, RemoteBackend
from .metrics import flesch_reading_ease, interpret_band
from .prompting import load_tasks_file


@click.group()
def main():
    """Personalized tutoring feedback engine."""


@main.command()
@click.option("--port", default=None, type=int, help="Listen port (overrides config).")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def serve(port: int | None, config_path: str | None):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    if port is not None:
        config.port = port
    app = create_app(config)
    uvicorn.run(app, host="0.0.0.0", port=config.port)


@main.group()
def cohort():
    """Synthetic cohort files."""


@cohort.command("generate")
@click.option("--n", default=30, type=int, show_default=True)
@click.option("--mean", default=72.0, type=float, show_default=True)
@click.option("--std", default=8.0, type=float, show_default=True)
@click.option("--seed", default=42, type=int, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Output file (default stdout).")
def cohort_generate(n: int, mean: float, std: float, seed: int, out: str | None):
    """Generate a seeded cohort and write it as JSON."""
    spec = CohortSpec(n=n, mean=mean, std_dev=std, seed=seed)
    text = cohort_to_json(spec, generate_cohort(spec))
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")


@main.group()
def experiment():
    """Cohort experiment harness."""


@experiment.command("run")
@click.option("--plan", "plan_path", default=None, type=click.Path(exists=True),
              help="Task plan JSON (default: the three shipped tasks).")
@click.option("--cohort", "cohort_path", required=True, type=click.Path(exists=True))
@click.option("--backend", "backend_kind", default="scripted",
              type=click.Choice(["scripted", "remote"]), show_default=True)
@click.option("--samples", default=5, type=int, show_default=True,
              help="Generations per arm for self-consistency.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def experiment_run(
    plan_path: str | None,
    cohort_path: str,
    backend_kind: str,
    samples: int,
    out_dir: str,
):
    """Run tasks x (tiers + general) over a cohort and export the report."""
    if plan_path is None:
        plan = default_plan(samples_per_task=samples)
    else:
        tasks = load_tasks_file(plan_path)
        plan = ExperimentPlan(tasks=tuple(tasks), samples_per_task=samples)
    _, students = load_cohort(cohort_path)

    if backend_kind == "remote":
        backend = RemoteBackend.from_env()
    else:
        backend = scripted_fixture_backend(list(plan.tasks))
    gateway = Gateway(backend)

    report = run_experiment(plan, students, gateway)
    written = export_report(report, out_dir)
    ok = sum(1 for arm in report.readings if arm.status == "ok")
    click.echo(f"{len(report.readings)} arms ({ok} ok); wrote {len(written)} files to {out_dir}")
    for claim, holds in report.ordering_checks:
        click.echo(f"  {claim}: {'holds' if holds else 'fails'}")


@main.group()
def metrics():
    """Feedback metrics over files."""


@metrics.command("fkrs")
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
def metrics_fkrs(file_path: str):
    """Print the reading-ease score and band of a text file."""
    text = Path(file_path).read_text(encoding="utf-8")
    try:
        score = flesch_reading_ease(text)
    except NoProse:
        click.echo("no prose: text contains no sentences once code is excluded")
        sys.exit(1)
    click.echo(f"fkrs: {score:.3f}")
    click.echo(f"band: {interpret_band(score)}")


if __name__ == "__main__":
    main()
