"""Command-line driver: ``python -m app run|sweep|verify|replay``."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import click

from app.core.config import settings
from app.core.enums import EvolutionMode, MatcherKind
from app.core.exceptions import SimulationError
from app.core.logger import configure_logging
from app.schemas.run import SweepRequest, load_run_config, load_sweep_request, make_run_config
from app.services import acceptance, harness

logger = logging.getLogger(__name__)


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


class SimulationGroup(click.Group):
    """Turns domain errors into clean CLI failures."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except SimulationError as e:
            logger.debug("Command failed", exc_info=True)
            raise click.ClickException(str(e)) from e


@click.group(cls=SimulationGroup)
@click.option("--log-level", default=settings.log_level, show_default=True, help="Logging level.")
def cli(log_level: str) -> None:
    """Evolving stable matching simulator."""
    configure_logging(log_level.upper())


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML run config.")
@click.option("--n", type=int)
@click.option("--alpha", type=int)
@click.option("--mode", type=click.Choice([m.value for m in EvolutionMode]))
@click.option("--matcher", type=click.Choice([m.value for m in MatcherKind]))
@click.option("--seed", type=int)
@click.option("--max-t", "max_t", type=int)
@click.option("--sample-every", "sample_every", type=int)
@click.option("--c-window", "c_window", type=float)
@click.option("--warmup-t", "warmup_t", type=int)
@click.option("--no-events", is_flag=True, help="Do not write the event log.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Run directory.")
def run(config_path: Optional[str], out_dir: Optional[str], no_events: bool, **fields) -> None:
    """Execute one simulation and write its artifacts."""
    if no_events:
        fields["record_events"] = False
    if config_path:
        config = load_run_config(config_path, **fields)
    else:
        if fields.get("n") is None:
            raise click.UsageError("--n is required without --config")
        config = make_run_config(**fields)
    target = Path(out_dir) if out_dir else Path(settings.output_dir) / config.run_name()
    _, manifest = harness.run(config, target)
    _echo_json({"out": str(target), **manifest.model_dump(mode="json", include={"t_final", "runs_completed", "summary"})})


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML sweep request.")
@click.option("--n", "ns", type=int, multiple=True, help="Repeat for each n.")
@click.option("--matcher", "matchers", type=click.Choice([m.value for m in MatcherKind]), multiple=True)
@click.option("--alpha", type=int, default=1, show_default=True)
@click.option("--replications", type=int, default=10, show_default=True)
@click.option("--seed", "base_seed", type=int, default=0, show_default=True)
@click.option("--c-window", "c_window", type=float, default=settings.default_c_window, show_default=True)
@click.option("--warmup-scale", type=float, default=1.0, show_default=True)
@click.option("--horizon-scale", type=float, default=1.0, show_default=True)
@click.option("--parallelism", type=int, default=settings.sweep_parallelism, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
def sweep(config_path: Optional[str], out_dir: Optional[str], ns, matchers, **fields) -> None:
    """Seeded replications over several n, aggregated with growth fits."""
    if config_path:
        request = load_sweep_request(config_path)
    else:
        if not ns:
            raise click.UsageError("at least one --n is required without --config")
        data = {"ns": list(ns), **fields}
        if matchers:
            data["matchers"] = list(matchers)
        try:
            request = SweepRequest.model_validate(data)
        except ValueError as e:
            raise click.UsageError(str(e)) from e
    summary = harness.sweep(request, out_dir)
    _echo_json(summary.model_dump(mode="json", exclude={"replications"}))


@cli.command()
@click.option("--check", "checks", multiple=True, type=click.Choice(list(acceptance.CHECKS)))
def verify(checks) -> None:
    """Run the fast acceptance checks."""
    report = acceptance.verify(list(checks) or None)
    _echo_json(report.to_json_dict())
    if not report.passed:
        raise click.ClickException("acceptance checks failed")


@cli.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
def replay(run_dir: str) -> None:
    """Re-execute a run from its manifest and compare byte for byte."""
    report = harness.replay(run_dir, strict=False)
    _echo_json(report.to_json_dict())
    if not report.ok:
        raise click.ClickException(f"replay of {run_dir} diverged")


@cli.command()
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
def tightness(n: int, k: int) -> None:
    """Blocking pairs of a matching stable only for nearby lists."""
    _echo_json(harness.tightness_report(n, k).to_json_dict())


def main() -> None:
    cli(prog_name="esm")
