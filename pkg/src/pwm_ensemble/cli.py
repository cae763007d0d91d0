"""Command line front end: ``pwm-ensemble run | bounds | replay``.

Exit codes: 0 success, 1 failed runs or I/O error, 2 invalid input,
3 a requested bound is not applicable.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .bounds import (
    NotApplicable,
    bound_async,
    bound_b1,
    bound_b2,
    bound_delayed,
    bound_missing,
    lambda_term,
)
from .config import AGGREGATORS, load_config
from .core import InvalidArgument
from .environment import ConfigurationError, TraceError, read_trace
from .experiment import run_events, run_sweep, write_results

OUTPUT_DIR_ENV = "PWM_ENSEMBLE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_NOT_APPLICABLE = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str):
    try:
        return load_config(path)
    except ConfigurationError as exc:
        _fail(f"invalid config {path}:\n{exc}", EXIT_INVALID)


def resolve_output_dir(cli_value: str | None, cfg_value: str | None) -> Path:
    """--output-dir, then the config's output.dir, then the environment variable, then ./results."""
    return Path(cli_value or cfg_value or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


@click.group()
def main() -> None:
    """Aggregate distributed online learners and check their mistake bounds."""


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output-dir", "-o", default=None,
              help=f"Result directory (default: config output.dir, ${OUTPUT_DIR_ENV}, ./results).")
@click.option("--workers", default=1, show_default=True, type=click.IntRange(1),
              help="Worker processes for independent (seed, point) runs.")
def run(config: str, output_dir: str | None, workers: int) -> None:
    """Run every seed and sweep point described by CONFIG."""
    cfg = _load(config)
    out = resolve_output_dir(output_dir, cfg.output.dir)
    try:
        result = run_sweep(cfg, out, workers=workers)
        paths = write_results(result, out, cfg.output.name, cfg.sweep.variable if cfg.sweep else None)
    except ConfigurationError as exc:
        _fail(str(exc), EXIT_INVALID)
    except OSError as exc:
        _fail(f"cannot write results to {out}: {exc}", EXIT_FAILED)
    for s in result.summary:
        point = "" if s["point"] is None else f"{s['variable']}={s['point']} "
        click.echo(f"{point}{s['aggregator']}: P={s['p_system_mean']:.4f} "
                   f"(se {s['p_system_se']:.4f}, {s['seeds']} seeds)")
    for p in paths:
        click.echo(f"wrote {p}")
    if not result.ok:
        for f in result.failures:
            click.echo(f"failed seed {f['seed']} at point {f['point']}: {f['error']}", err=True)
        sys.exit(EXIT_FAILED)


@main.command()
@click.option("--k", "k", type=int, required=True, help="Number of learners.")
@click.option("--n", "n", type=int, required=True, help="Number of slots.")
@click.option("--p-opt", type=float, default=None, help="Best static weight vector mistake rate.")
@click.option("--p-star", type=float, default=None, help="Best classifier mistake rate.")
@click.option("--v-star", type=int, default=None, help="Classifiers attaining p-star.")
@click.option("--max-delay", type=int, multiple=True,
              help="Maximum label delay; give once for all learners or once per learner.")
@click.option("--alpha", type=float, default=None, help="Synchronization index.")
@click.option("--mu", type=float, default=None, help="Label observation probability.")
@click.option("--epsilon", type=float, default=0.05, show_default=True)
@click.option("--observed-errors", type=int, default=None, help="Recognized mistakes N_e.")
def bounds(k, n, p_opt, p_star, v_star, max_delay, alpha, mu, epsilon, observed_errors) -> None:
    """Print the base bound and every extension bound the inputs allow."""
    if p_opt is None and (p_star is None or v_star is None):
        _fail("give --p-opt, or --p-star with --v-star", EXIT_INVALID)
    if (mu is None) != (observed_errors is None):
        _fail("--mu and --observed-errors go together", EXIT_INVALID)
    not_applicable = False
    try:
        parts = []
        if p_opt is not None:
            parts.append(bound_b1(k, n, p_opt))
            click.echo(f"B1 = {parts[-1]:.6g}")
        if p_star is not None and v_star is not None:
            parts.append(bound_b2(k, n, p_star, v_star))
            click.echo(f"B2 = {parts[-1]:.6g}")
        base = min(*parts, 1.0)
        click.echo(f"B = {base:.6g}")
        if max_delay:
            delays = list(max_delay) * k if len(max_delay) == 1 else list(max_delay)
            click.echo(f"delayed = {bound_delayed(base, delays, n, k):.6g}")
        if alpha is not None:
            click.echo(f"async = {bound_async(base, alpha):.6g}")
        if mu is not None:
            try:
                click.echo(f"missing = {bound_missing(base, mu, epsilon, observed_errors):.6g}")
            except NotApplicable as exc:
                not_applicable = True
                lam = lambda_term(epsilon, observed_errors) if observed_errors > 0 else float("inf")
                click.echo(f"missing = not applicable (lambda={lam:.6g}, mu={mu}): {exc}")
    except InvalidArgument as exc:
        _fail(str(exc), EXIT_INVALID)
    if not_applicable:
        sys.exit(EXIT_NOT_APPLICABLE)


@main.command()
@click.argument("trace", type=click.Path(dir_okay=False))
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--aggregator", "-a", multiple=True, type=click.Choice(AGGREGATORS),
              help="Aggregators to run instead of the config's list.")
def replay(trace: str, config: str, aggregator: tuple[str, ...]) -> None:
    """Re-run the learners of CONFIG on the recorded events in TRACE; prints JSON metrics."""
    cfg = _load(config)
    try:
        header, events = read_trace(trace)
    except OSError as exc:
        _fail(f"cannot read trace {trace}: {exc.strerror}", EXIT_FAILED)
    except TraceError as exc:
        _fail(f"{trace}: {exc}", EXIT_INVALID)
    if header["k"] != cfg.k:
        _fail(f"trace has K={header['k']} but the config says k={cfg.k}", EXIT_INVALID)
    try:
        metrics = run_events(cfg, events, aggregator or None)
    except (ConfigurationError, InvalidArgument) as exc:
        _fail(str(exc), EXIT_INVALID)
    out = {"trace": header.get("meta", {}), "metrics": {a: m.to_record() for a, m in metrics.items()}}
    click.echo(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
