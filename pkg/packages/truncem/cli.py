"""
Truncem CLI
Command-line entry point: simulate paths, run convergence experiments and
diagnostics, and check model assumptions.
"""

import functools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from rich.console import Console
from rich.table import Table

from . import __version__
from .assumptions import (
    SAMPLER_MODES,
    SegmentPairSampler,
    check_initial_holder,
    check_khasminskii_inequality,
    check_polynomial_growth,
)
from .config_adapter import load_experiment_config, write_default_config
from .errors import TruncemError
from .harness import (
    ERROR_NORMS,
    moment_diagnostic,
    run_convergence,
    simulate_sample,
    step_gap_diagnostic,
    theoretical_order,
)
from .model import AssumptionConstants, build_model, model_names
from .noise import dump_grid, generate
from .reporting import write_convergence_csv, write_gap_csv, write_moment_csv, write_path_csv

logger = logging.getLogger(__name__)

console = Console()

LOG_FORMAT = "%(asctime)s [%(levelname)s] [TRUNCEM]: %(message)s"

MODEL_PARAMS = ("a0", "a1", "a2", "lam", "mu", "sigma0", "sigma1", "tau", "xi")


def configure_logging(level: str, log_file: Optional[str] = None):
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers, force=True)


def _handle_errors(fn: Callable) -> Callable:
    """Map library errors onto exit codes 1/2/3"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TruncemError as exc:
            logger.error(f"{type(exc).__name__}: {exc}")
            click.echo(f"Error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _model_options(fn: Callable) -> Callable:
    fn = click.option("--model", "model_id", type=click.Choice(model_names()), default=None,
                      help="Built-in model (default from config: cubic-vol)")(fn)
    for name in reversed(MODEL_PARAMS):
        fn = click.option(f"--{name}", type=float, default=None, help=f"Model parameter {name}")(fn)
    return fn


def _experiment_options(fn: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="YAML file with an 'experiment:' section"),
        click.option("--T", "horizon_t", type=float, default=None, help="Terminal time T"),
        click.option("--ref-exp", type=int, default=None, help="Reference step 2^-ref_exp"),
        click.option("--step-exps", type=str, default=None, help="Comma-separated exponents, e.g. 7,8,9"),
        click.option("--samples", type=int, default=None, help="Monte Carlo sample count M"),
        click.option("--seed", "base_seed", type=int, default=None, help="Base seed"),
        click.option("--varrho", type=float, default=None, help="Radius exponent in (0, 1/2)"),
        click.option("--h-scale", type=float, default=None, help="Scale K of H(R) = K R^r"),
        click.option("--error-norm", type=click.Choice(ERROR_NORMS), default=None),
        click.option("--workers", type=int, default=None, help="Worker processes"),
        click.option("--truncate/--no-truncate", default=None, help="Truncated or plain EM"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return _model_options(fn)


def _parse_exponents(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{text}'", param_hint="--step-exps")


def _load_config(ctx: click.Context, kwargs: Dict[str, Any]):
    params = {name: kwargs.pop(name) for name in MODEL_PARAMS}
    params = {k: v for k, v in params.items() if v is not None}
    config_path = kwargs.pop("config_path", None)
    kwargs["step_exps"] = _parse_exponents(kwargs.get("step_exps"))
    config = load_experiment_config(config_path, model_params=params, **kwargs)
    if not ctx.obj.get("level_explicit"):
        logging.getLogger().setLevel(config.log_level)
    return config


@click.group()
@click.version_option(__version__, prog_name="truncem")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Logging level (env TRUNCEM_LOG_LEVEL)")
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="Also log to this file")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str], log_file: Optional[str]):
    """Truncated Euler-Maruyama scheme for SFDEs with super-linear coefficients."""
    level = log_level or os.getenv("TRUNCEM_LOG_LEVEL")
    configure_logging(level or "INFO", log_file)
    ctx.ensure_object(dict)
    ctx.obj["level_explicit"] = level is not None


@cli.command()
@_model_options
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--delta-exp", type=int, default=7, show_default=True, help="Step size 2^-e")
@click.option("--T", "horizon_t", type=float, default=None, help="Terminal time T")
@click.option("--seed", "base_seed", type=int, default=None, help="Base seed")
@click.option("--sample-index", type=int, default=0, show_default=True)
@click.option("--truncate/--no-truncate", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default="path.csv", show_default=True)
@click.pass_context
@_handle_errors
def simulate(ctx: click.Context, delta_exp: int, sample_index: int, out: str, **kwargs):
    """Simulate one path and write k,t,y..,yhat.. as CSV."""
    # --T bypasses the experiment grid rules: T=0, T < tau and off-grid T are valid here
    horizon = kwargs.pop("horizon_t")
    kwargs.update(step_exps=str(delta_exp), ref_exp=delta_exp + 1)
    config = _load_config(ctx, kwargs)
    path, _ = simulate_sample(config, 2.0**-delta_exp, sample_index, horizon=horizon)
    write_path_csv(path, out)

    table = Table(title=f"{path.model_id}, delta = 2^-{delta_exp}")
    table.add_column("steps", justify="right")
    table.add_column("radius R", justify="right")
    table.add_column("max |Y|", justify="right")
    table.add_column("Y(T)", justify="right")
    table.add_row(
        str(path.n_steps),
        f"{path.radius:.6g}",
        f"{abs(path.nodes_y.values).max():.6g}",
        ", ".join(f"{v:.6g}" for v in path.y_at(path.n_steps)),
    )
    console.print(table)
    console.print(f"Wrote {out}")


@cli.command()
@_experiment_options
@click.option("--out", type=click.Path(dir_okay=False), default="report.csv", show_default=True)
@click.pass_context
@_handle_errors
def run(ctx: click.Context, out: str, **kwargs):
    """Coupled Monte Carlo strong-convergence experiment."""
    config = _load_config(ctx, kwargs)
    report = run_convergence(config)
    write_convergence_csv(report, out)

    table = Table(title=f"Strong error, {config.model_id}, T={config.horizon_t}, M={report.samples_used}")
    table.add_column("delta", justify="right")
    table.add_column("rms error", justify="right")
    table.add_column("std err", justify="right")
    for row in report.rows:
        table.add_row(f"{row.delta:.6g}", f"{row.rms_error:.6g}", f"{row.std_err:.2g}")
    console.print(table)
    console.print(f"RMS slope: {report.slope:.4f} (r^2 = {report.r_squared:.4f})")
    console.print(f"Mean-square order: {report.mean_square_order:.4f}")
    if report.blow_ups:
        console.print(f"Blow-ups excluded: {report.blow_ups}")
    console.print(f"Wrote {out}")


@cli.command()
@_experiment_options
@click.option("--p", "p", type=float, default=4.0, show_default=True, help="Moment order")
@click.option("--out", type=click.Path(dir_okay=False), default="moments.csv", show_default=True)
@click.pass_context
@_handle_errors
def moments(ctx: click.Context, p: float, out: str, **kwargs):
    """Uniform moment bound diagnostic: sup_k E|Y(k delta)|^p per step size."""
    config = _load_config(ctx, kwargs)
    report = moment_diagnostic(config, p)
    write_moment_csv(report, out)

    table = Table(title=f"sup_k E|Y|^{p:g}, {config.model_id}")
    table.add_column("delta", justify="right")
    table.add_column("sup moment", justify="right")
    table.add_column("blow-ups", justify="right")
    for row in report.rows:
        table.add_row(f"{row.delta:.6g}", f"{row.sup_moment:.6g}", str(row.blow_ups))
    console.print(table)
    console.print(f"Wrote {out}")


@cli.command()
@_experiment_options
@click.option("--out", type=click.Path(dir_okay=False), default="gap.csv", show_default=True)
@click.pass_context
@_handle_errors
def gap(ctx: click.Context, out: str, **kwargs):
    """Gap between the continuous interpolant Z and the step process."""
    config = _load_config(ctx, kwargs)
    report = step_gap_diagnostic(config)
    write_gap_csv(report, out)

    table = Table(title=f"sup |Z_T - Ybar_T|, {config.model_id}")
    table.add_column("delta", justify="right")
    table.add_column("rms gap", justify="right")
    for row in report.rows:
        table.add_row(f"{row.delta:.6g}", f"{row.rms_gap:.6g}")
    console.print(table)
    console.print(
        f"RMS slope: {report.slope:.4f}; mean-square rate bound {report.expected_mean_square_rate:.4f}"
    )
    console.print(f"Wrote {out}")


@cli.command("verify-assumptions")
@_model_options
@click.option("--q", type=float, default=27.0, show_default=True)
@click.option("--alpha0", type=float, default=20.0, show_default=True)
@click.option("--alpha1", type=float, default=53.0, show_default=True)
@click.option("--alpha2", type=float, default=52.0, show_default=True)
@click.option("--rhat", type=float, default=None, help="Khasminskii exponent (default: the model's)")
@click.option("--c1", type=float, default=200.0, show_default=True)
@click.option("--c2", type=float, default=None, help="Initial-data Hoelder constant (default: the model's)")
@click.option("--count", type=int, default=10_000, show_default=True)
@click.option("--bound", type=float, default=5.0, show_default=True)
@click.option("--nodes", type=int, default=16, show_default=True)
@click.option("--sampler", type=click.Choice(SAMPLER_MODES), default="uniform", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_handle_errors
def verify_assumptions(model_id, q, alpha0, alpha1, alpha2, rhat, c1, c2, count, bound, nodes, sampler, seed,
                       **kwargs):
    """Sample the monotonicity, growth and initial-data conditions."""
    params = {k: v for k, v in kwargs.items() if v is not None}
    model = build_model(model_id or "cubic-vol", params)
    if c2 is None:
        c2 = model.initial_holder_c2
    constants = AssumptionConstants(q=q, alpha0=alpha0, alpha1=alpha1, alpha2=alpha2, c1=c1, c2=c2, rhat=rhat)
    pairs = SegmentPairSampler(bound=bound, nodes=nodes, seed=seed, mode=sampler)

    reports = [
        check_khasminskii_inequality(model, constants, pairs, count),
        check_polynomial_growth(model, constants, pairs, count),
        check_initial_holder(model, c2, count, seed),
    ]
    table = Table(title=f"Sampled assumptions, {model.model_id} ({sampler})")
    table.add_column("check")
    table.add_column("samples", justify="right")
    table.add_column("violations", justify="right")
    table.add_column("worst margin", justify="right")
    for report in reports:
        table.add_row(report.check, str(report.samples), str(report.violations), f"{report.worst_margin:.6g}")
    console.print(table)
    console.print(f"Total violations: {sum(r.violations for r in reports)}")


@cli.command()
@click.option("--p", "p", type=float, required=True, help="Moment order p = q - eps")
@click.option("--r", "r", type=float, required=True, help="Growth exponent r")
@click.option("--r-hat", type=float, default=None, help="Khasminskii exponent (default r)")
@_handle_errors
def theory(p: float, r: float, r_hat: Optional[float]):
    """Theoretical convergence rate for (p, r, r_hat)."""
    order = theoretical_order(p, r, r if r_hat is None else r_hat)
    table = Table(title="Theoretical rate")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("p_hat", f"{order.p_hat:.6g}")
    table.add_row("mean-square order", f"{order.gamma_hat:.6g}")
    table.add_row("RMS slope", f"{order.rms_slope:.6g}")
    table.add_row("rate condition holds", "yes" if order.condition_holds else "no")
    console.print(table)


@cli.command("dump-noise")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--sample-index", type=int, default=0, show_default=True)
@click.option("--exp", "fine_exp", type=int, default=12, show_default=True, help="Fine step 2^-e")
@click.option("--T", "horizon_t", type=float, default=10.0, show_default=True)
@click.option("--dim", type=int, default=1, show_default=True, help="Noise dimension")
@click.option("--out", type=click.Path(dir_okay=False), default="noise.bin", show_default=True)
@_handle_errors
def dump_noise(seed: int, sample_index: int, fine_exp: int, horizon_t: float, dim: int, out: str):
    """Write the Brownian increments of one sample in binary form."""
    delta = 2.0**-fine_exp
    grid = generate(seed, sample_index, max(1, int(round(horizon_t / delta))), delta, dim)
    dump_grid(grid, out)
    console.print(f"Wrote {grid.n_steps} increments to {out}")


@cli.command("init-config")
@click.option("--path", type=click.Path(dir_okay=False), default="config/truncem.yaml", show_default=True)
@click.option("--force", is_flag=True, help="Overwrite an existing file")
@_handle_errors
def init_config(path: str, force: bool):
    """Write the default experiment configuration."""
    if Path(path).exists() and not force:
        click.echo(f"{path} already exists (use --force to overwrite)", err=True)
        sys.exit(1)
    write_default_config(path)
    console.print(f"Wrote {path}")


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
