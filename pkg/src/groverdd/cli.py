"""Command-line entry point: ``groverdd run|sweep|catalog|validate-calibration``."""

from __future__ import annotations

import logging
import sys

import click

from groverdd.dd import sequence_catalog
from groverdd.errors import GroverDDError, NumericIntegrityError
from groverdd.harness import (
    DD_OPTIONS,
    ExperimentConfig,
    emit_results,
    parse_iterations,
    results_csv,
    run_experiment,
)
from groverdd.noise import available_calibrations, load_calibration

EXIT_CONFIG = 2
EXIT_INTEGRITY = 3


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_INTEGRITY if isinstance(exc, NumericIntegrityError) else EXIT_CONFIG)


def _experiment_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML config file."),
        click.option("--qubits", type=int, help="Register size."),
        click.option("--target", help="Marked bitstring, qubit 0 leftmost."),
        click.option("--iterations", help="N, a..b or a,b,c."),
        click.option("--calibration", help="Bundled label or TOML path; omit for noiseless."),
        click.option("--shots", type=int),
        click.option("--seed", type=int),
        click.option("--sigma-z", "sigma_z", type=float, help="Detuning spread, rad/s."),
        click.option("--ensemble", "ensemble_size", type=int, help="Detuning draws per cell."),
        click.option("--twoq-scale", "twoq_scale", type=float),
        click.option("--workers", type=int),
        click.option("--exact", is_flag=True, default=None, help="Report exact probabilities."),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _build_config(config_path, dd, **flags) -> ExperimentConfig:
    overrides = {
        "n_qubits": flags.pop("qubits"),
        "iterations": parse_iterations(flags.pop("iterations")) if flags.get("iterations") else None,
        "dd": dd,
    }
    flags.pop("iterations", None)
    overrides.update(flags)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if config_path:
        return ExperimentConfig.from_file(config_path, **overrides)
    return ExperimentConfig.from_mapping(overrides)


def _execute(cfg: ExperimentConfig) -> None:
    res = run_experiment(cfg)
    if cfg.out:
        for p in emit_results(res, cfg.out):
            click.echo(f"wrote {p}", err=True)
    else:
        click.echo(results_csv(res), nl=False)


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    """Noisy Grover search with dynamical decoupling."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@_experiment_options
@click.option("--dd", default=None, help=f"One of {', '.join(DD_OPTIONS)}.")
def run(config_path, dd, **flags):
    """Run one DD option over the requested iterations."""
    try:
        cfg = _build_config(config_path, (dd,) if dd else None, **flags)
        if len(cfg.dd) != 1:
            raise click.UsageError("run takes a single --dd option; use sweep for several")
        _execute(cfg)
    except GroverDDError as exc:
        _fail(exc)


@main.command()
@_experiment_options
@click.option("--dd", default=None, help="Comma-separated DD options (default: all).")
def sweep(config_path, dd, **flags):
    """Run the iterations x DD-options grid."""
    try:
        options = tuple(s for s in dd.split(",") if s.strip()) if dd else None
        cfg = _build_config(config_path, options, **flags)
        if dd is None and not config_path:
            cfg = cfg.with_(dd=DD_OPTIONS)
        _execute(cfg)
    except GroverDDError as exc:
        _fail(exc)


@main.command()
def catalog():
    """Print every supported DD sequence with its phases."""
    click.echo(sequence_catalog(), nl=False)


@main.command("validate-calibration")
@click.argument("ref", required=False)
def validate_calibration(ref):
    """Load and summarize a calibration; with no argument, list bundled labels."""
    if ref is None:
        click.echo("\n".join(available_calibrations()))
        return
    try:
        cal = load_calibration(ref)
    except GroverDDError as exc:
        _fail(exc)
    click.echo(f"label     {cal.label}")
    if cal.device:
        click.echo(f"device    {cal.device}")
    click.echo(f"qubits    {' '.join(str(q) for q in cal.qubits)}")
    for i, q in enumerate(cal.qubits):
        click.echo(
            f"  q{i} ({q}): T1={cal.t1[i] * 1e6:.3f}us T2={cal.t2[i] * 1e6:.3f}us readout={cal.readout_error[i]:.4g}"
        )
    click.echo(f"2Q error  default {cal.twoq_default:.4g}")
    for (a, b), e in sorted(cal.twoq_error.items()):
        click.echo(f"  {a}-{b}: {e:.4g}")
    for msg in cal.clamped:
        click.echo(f"warning: {msg}", err=True)


if __name__ == "__main__":
    main()
