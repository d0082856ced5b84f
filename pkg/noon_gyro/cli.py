"""
noon-gyro CLI

Usage:
    noon-gyro simulate --mode rate --n 1 --n 2 --seed 7
    noon-gyro coincide events_n2.ntag --n 2 --window 1e-9 --tau 0.02
    noon-gyro fit series_n1.txt --bootstrap 1000
    noon-gyro report --fit1 fit_n1.json --fit2 fit_n2.json --series1 series_n1.txt --series2 series_n2.txt
    noon-gyro limits
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Tuple

import click
import pydantic

from noon_gyro import __app_name__, __version__
from noon_gyro.errors import ConvergenceError, GyroError, ValidationError
from noon_gyro.estimation.bands import band_coverage
from noon_gyro.estimation.fitting import PARAMETERS, FitSettings, fit_rate_model
from noon_gyro.estimation.resampling import bootstrap_errors
from noon_gyro.fileio.config import OUTPUT_DIR_ENVVAR, RunConfig, config_hash, load_config
from noon_gyro.fileio.event_files import read_events, write_events, write_events_text
from noon_gyro.fileio.report_files import (
    FitReport,
    PrecisionDocument,
    fit_curve_table,
    precision_tables,
    read_fit_report,
    render_summary,
    time_trace_table,
    write_json_document,
    write_summary,
    write_table,
)
from noon_gyro.fileio.series_files import read_series, write_series
from noon_gyro.metrics.limits import bias_point, heisenberg_limit, sql_limit
from noon_gyro.metrics.precision_report import build_report
from noon_gyro.physics.sagnac import sagnac_scale_factor
from noon_gyro.simulation.counts import simulate_binned_counts
from noon_gyro.simulation.rotation import profile_velocity, step_target, truncated_profile
from noon_gyro.simulation.tags import simulate_time_tags
from noon_gyro.tagging.binning import bin_coincidences, bin_singles
from noon_gyro.tagging.coincidence import count_coincidences

_logger = logging.getLogger(__name__)

RUNS = ("1", "2")


class State:
    def __init__(self, config: RunConfig, output_dir: Optional[str]):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)

    def output(self, name: str) -> Path:
        return self.output_dir / name


def handle_errors(command):
    """Turn toolkit errors into a one-line message and the error's exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except GyroError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except pydantic.ValidationError as exc:
            click.echo(f"error: invalid input:\n{exc}", err=True)
            sys.exit(ValidationError.exit_code)

    return wrapper


def _runs(selected: Tuple[str, ...]) -> Tuple[int, ...]:
    return tuple(sorted({int(n) for n in selected})) or (1, 2)


@click.group()
@click.version_option(version=__version__, prog_name=__app_name__)
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for fit iterations")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Run configuration (JSON)")
@click.option(
    "--output-dir",
    envvar=OUTPUT_DIR_ENVVAR,
    default=None,
    help=f"Directory for outputs (env {OUTPUT_DIR_ENVVAR}; default from config)",
)
@click.pass_context
def cli(ctx: click.Context, verbose: int, config_path: Optional[str], output_dir: Optional[str]):
    """NOON-state Sagnac gyroscope - simulate, fit and assess rotation precision."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(config_path)
    except GyroError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    ctx.obj = State(config, output_dir)


# --- Simulation ---


@cli.command()
@click.option("--mode", type=click.Choice(["rate", "tags"]), default="rate", show_default=True)
@click.option("--n", "runs", multiple=True, type=click.Choice(RUNS), help="Photon number (repeatable; default both)")
@click.option("--seed", type=int, default=None, help="Master seed (overrides config)")
@click.option("--span", type=float, default=None, help="Simulate only the first SPAN seconds")
@click.option("--text", is_flag=True, help="Write event files in the text form (tags mode)")
@click.pass_obj
@handle_errors
def simulate(state: State, mode: str, runs: Tuple[str, ...], seed: Optional[int], span: Optional[float], text: bool):
    """Simulate binned counts or detector time tags for each run."""
    config = state.config
    seed = config.seed if seed is None else seed
    if seed < 0:
        raise ValidationError(f"seed must be nonnegative, got {seed}")
    digest = config_hash(config)
    manifest = {"command": "simulate", "mode": mode, "seed": seed, "config_hash": digest, "files": []}

    for n in _runs(runs):
        params = config.model(n)
        profile = config.profile(n)
        if span is not None:
            profile = truncated_profile(profile, span)
        if mode == "rate":
            series = simulate_binned_counts(params, profile, seed, metadata={"config_hash": digest})
            path = write_series(state.output(f"series_n{n}.txt"), series)
            entry = {"path": str(path), "photon_number": n, "bins": len(series), "events": int(series.counts.sum())}
        else:
            stream1, stream2 = simulate_time_tags(config.source, params, profile, seed)
            if text:
                path = write_events_text(state.output(f"events_n{n}.txt"), [stream1, stream2])
            else:
                path = write_events(state.output(f"events_n{n}.ntag"), [stream1, stream2])
            entry = {
                "path": str(path),
                "photon_number": n,
                "events": {"channel_1": len(stream1), "channel_2": len(stream2)},
            }
        entry["duration"] = profile.total_duration
        manifest["files"].append(entry)

    click.echo(json.dumps(manifest, indent=2))


# --- Tag processing ---


@cli.command()
@click.argument("event_file", type=click.Path(dir_okay=False))
@click.option("--n", "run", type=click.Choice(RUNS), default="2", show_default=True, help="Run whose profile labels the bins")
@click.option("--window", type=float, default=None, help="Coincidence window in seconds (default from config)")
@click.option("--tau", type=float, default=None, help="Bin duration in seconds (default from config)")
@click.option("--span", type=float, default=None, help="Binned span in seconds (default: whole profile)")
@click.option("--resolution", type=float, default=None, help="Tick resolution for text files without one")
@click.pass_obj
@handle_errors
def coincide(
    state: State,
    event_file: str,
    run: str,
    window: Optional[float],
    tau: Optional[float],
    span: Optional[float],
    resolution: Optional[float],
):
    """Bin singles and coincidences of an event file."""
    config = state.config
    n = int(run)
    window = config.coincidence_window if window is None else window
    tau = config.bin_duration(n) if tau is None else tau
    profile = config.profile(n)
    span = profile.total_duration if span is None else span
    if span > profile.total_duration * (1 + 1e-12):
        raise ValidationError(f"span {span} s exceeds the profile's {profile.total_duration} s")

    stream1, stream2 = read_events(event_file, resolution or config.source.timestamp_resolution)
    matches = count_coincidences(stream1, stream2, window)

    def omega(t):
        return profile_velocity(profile, t)

    def target(t):
        return step_target(profile, t)

    info = {"photon_number": n, "config_hash": config_hash(config), "coincidence_window": window}
    outputs = {
        "singles_ch1": bin_singles(stream1, tau, 0.0, span, omega, target, metadata=info),
        "singles_ch2": bin_singles(stream2, tau, 0.0, span, omega, target, metadata=info),
        "coincidences": bin_coincidences(matches, stream1.resolution, tau, 0.0, span, omega, target, metadata=info),
    }
    for name, series in outputs.items():
        path = write_series(state.output(f"{name}_n{n}.txt"), series)
        click.echo(f"{path}: {len(series)} bins, {int(series.counts.sum())} events")


# --- Estimation ---


@cli.command()
@click.argument("series_file", type=click.Path(dir_okay=False))
@click.option("--n", "run", type=click.Choice(RUNS), default=None, help="Photon number (default from the series header)")
@click.option("--bootstrap", type=int, default=None, help="Bootstrap resamples (0 = off; default from config)")
@click.option("--uniform-weights", is_flag=True, help="Unweighted least squares instead of Poisson weights")
@click.option("--seed", type=int, default=None, help="Bootstrap seed (overrides config)")
@click.option("--workers", type=int, default=1, show_default=True, help="Threads for bootstrap refits")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Fit report path")
@click.pass_obj
@handle_errors
def fit(
    state: State,
    series_file: str,
    run: Optional[str],
    bootstrap: Optional[int],
    uniform_weights: bool,
    seed: Optional[int],
    workers: int,
    output: Optional[str],
):
    """Fit the fringe model to a series file."""
    config = state.config
    series = read_series(series_file)
    n = int(run) if run else series.photon_number
    if n is None:
        raise ValidationError("series header has no photon_number; pass --n")
    settings = config.fit
    if uniform_weights:
        settings = FitSettings(**{**settings.model_dump(), "weighting": "uniform"})
    resamples = config.bootstrap_resamples if bootstrap is None else bootstrap

    result = fit_rate_model(series, n, settings=settings)
    spread = None
    if resamples and result.converged:
        spread = bootstrap_errors(
            series, n, resamples, config.seed if seed is None else seed,
            settings=settings, workers=workers, base_fit=result,
        )
    report = FitReport(
        series=str(series_file),
        config_hash=series.metadata.get("config_hash"),
        fit=result,
        bootstrap=spread,
        band_coverage=band_coverage(series, result.params) if len(series) else None,
    )
    path = write_json_document(output or state.output(f"fit_n{n}.json"), report)

    click.echo(f"\nFit N={n} ({len(series)} bins, {result.iterations} iterations)")
    for name in PARAMETERS:
        line = f"  {name:<20} {getattr(result.params, name):.6g} ± {result.standard_errors[name]:.3g}"
        if spread is not None:
            line += f"  (bootstrap ± {spread[name]:.3g})"
        click.echo(line)
    click.echo(f"  residual {result.residual_sum:.6g}, coverage {report.band_coverage}")
    click.echo(f"Report written to {path}")
    if not result.converged:
        raise ConvergenceError(
            f"fit did not converge after {result.iterations} iterations ({result.stop_reason})"
        )


# --- Precision ---


@cli.command()
@click.option("--fit1", required=True, type=click.Path(dir_okay=False), help="Fit report of the N=1 run")
@click.option("--fit2", required=True, type=click.Path(dir_okay=False), help="Fit report of the N=2 run")
@click.option("--series1", required=True, type=click.Path(dir_okay=False), help="Series of the N=1 run")
@click.option("--series2", required=True, type=click.Path(dir_okay=False), help="Series of the N=2 run")
@click.option(
    "--reference",
    type=click.Choice(["instantaneous", "block_mean"]),
    default="instantaneous",
    show_default=True,
    help="True velocity the block deviations are taken against",
)
@click.option("--draws", type=int, default=2000, show_default=True, help="Poisson draws per point of the numerical ΔΩ curve")
@click.pass_obj
@handle_errors
def report(state: State, fit1: str, fit2: str, series1: str, series2: str, reference: str, draws: int):
    """Precision report and plot-data tables from two fits."""
    fits = {1: read_fit_report(fit1).fit, 2: read_fit_report(fit2).fit}
    series = {1: read_series(series1), 2: read_series(series2)}
    for n in (1, 2):
        if fits[n].photon_number != n:
            raise ValidationError(f"--fit{n} holds a fit for N={fits[n].photon_number}")
        label = series[n].photon_number
        if label is not None and label != n:
            raise ValidationError(f"--series{n} is labelled N={label}")

    result = build_report(fits[1], fits[2], series[1], series[2], reference=reference)  # type: ignore[arg-type]
    document = PrecisionDocument(
        fits={"1": fit1, "2": fit2}, series={"1": series1, "2": series2}, report=result
    )
    write_json_document(state.output("precision_report.json"), document)

    seed = state.config.seed
    for n in (1, 2):
        params = fits[n].params
        write_table(state.output(f"fringe_n{n}.csv"), fit_curve_table(series[n], params))
        tables = precision_tables(series[n], params, reference, seed=seed, draws=draws)
        for name, frame in tables.items():
            write_table(state.output(f"precision_n{n}_{name}.csv"), frame)
    write_table(state.output("trace_n2.csv"), time_trace_table(series[2]))

    write_summary(state.output("report_summary.txt"), result)
    click.echo(render_summary(result))


@cli.command()
@click.pass_obj
@handle_errors
def limits(state: State):
    """Scale factor, SQL/Heisenberg limits and bias points of the configured models."""
    config = state.config
    click.echo(f"\nSagnac scale factor S_T = {sagnac_scale_factor(config.geometry):.5f} s")
    base = config.model(1)
    sql = sql_limit(base)
    click.echo(f"SQL         {sql:.4g} rad/s")
    click.echo(f"Heisenberg  {heisenberg_limit(base):.4g} rad/s")
    click.echo(f"ideal NOON  {sql / 2 ** 0.5:.4g} rad/s")
    for n in (1, 2):
        omega, precision = bias_point(config.model(n))
        click.echo(f"bias point N={n}: Ω = {omega:.4f} rad/s, ΔΩ = {precision:.4g} rad/s")
    click.echo()


def main():
    cli()


if __name__ == "__main__":
    main()
