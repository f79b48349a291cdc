"""Command-line entry point: ``swa-ltv [global options] {static,fig3,fig4,filter,analyze}``."""

from __future__ import annotations

import logging
import sys

import click

from . import runs
from .config import ConfigError, load_config, parse_assignment


def _emit(result: runs.RunResult):
    for p in result.paths:
        click.echo(str(p))
    for key, val in result.summary.items():
        click.echo(f"{key}: {val}", err=True)
    if not result.ok:
        click.echo("verification FAILED", err=True)
        sys.exit(1)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Flat YAML key/value file; keys are RunConfig field names.")
@click.option("--out-dir", help="Output directory (overrides out_dir).")
@click.option("--format", "fmt", type=click.Choice(["text", "binary"]),
              help="Output format (overrides output_format).")
@click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
              help="Override any config key; repeatable.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, config_path, out_dir, fmt, assignments, verbose):
    """Mobile-to-mobile shallow-water acoustic LTV channel simulator."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    try:
        for a in assignments:
            key, val = parse_assignment(a)
            overrides[key] = val
        if out_dir is not None:
            overrides["out_dir"] = out_dir
        if fmt is not None:
            overrides["output_format"] = fmt
        ctx.obj = load_config(config_path, overrides)
    except ConfigError as exc:
        raise click.UsageError(str(exc))


@main.command()
@click.pass_obj
def static(cfg):
    """Static CFR and CIR between the configured endpoints."""
    _emit(runs.run_static(cfg))


@main.command()
@click.pass_obj
def fig3(cfg):
    """|r_n(m)| sweeps for the moving-receiver and moving-transmitter cases."""
    _emit(runs.run_fig3(cfg))


@main.command()
@click.pass_obj
def fig4(cfg):
    """LTI responses of the static and co-moving cases."""
    _emit(runs.run_fig4(cfg))


@main.command("filter")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--structure", type=click.Choice(["type1", "type2"]), default=None)
@click.option("--case", "case", type=click.Choice(["MovingRx", "MovingTx", "Static", "CoMoving"]),
              default=None)
@click.option("--input-rate", type=float, default=None, help="Sample rate of a raw .f64 input.")
@click.pass_obj
def filter_cmd(cfg, input_path, structure, case, input_rate):
    """Pass a waveform through the selected LTV structure."""
    try:
        result = runs.run_filter(cfg, input_path, structure, case, input_rate)
    except (ConfigError, ValueError) as exc:
        raise click.UsageError(str(exc))
    _emit(result)


@main.command()
@click.pass_obj
def analyze(cfg):
    """Closed-form delay/Doppler reports and their check against simulated grids."""
    _emit(runs.run_analyze(cfg))


if __name__ == "__main__":
    main()
