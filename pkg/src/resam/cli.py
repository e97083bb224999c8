"""Command line interface.

``resam audit``  - randomized resilience audit of one rule
``resam run``    - execute the single run described by a config file
``resam sweep``  - execute a sweep config, writing per-run CSV/JSON plus
                   a sweep.json index

Exit codes: 0 success, 1 audit violation or diverged run, 2 bad input.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import click

from .aggregation import CERTIFIED_RULE_NAMES, RULE_NAMES, Rule
from .audit import randomized_audit
from .config import (
    SCHEMA_VERSION,
    ConfigError,
    ExperimentConfig,
    expand_sweep,
    load_config,
    resolve_output_dir,
    write_json_atomic,
    write_run_outputs,
)
from .rng import RngStream
from .simulator import run as run_simulation


@click.group()
def main() -> None:
    """Laboratory for momentum SGD with resilient aggregation."""


@main.command()
@click.argument("rule_name", metavar="RULE")
@click.option("--n", "n", type=int, required=True, help="Number of workers.")
@click.option("--f", "f", type=int, required=True, help="Adversarial workers tolerated.")
@click.option("--d", "d", type=int, default=1, show_default=True, help="Dimension.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--q", type=int, default=None, help="Candidates averaged (multi_krum_star).")
@click.option(
    "--measure",
    is_flag=True,
    help="Measure the empirical coefficient instead of checking a certified one.",
)
@click.option("--json-out", type=click.Path(), default=None, help="Write the full report here.")
def audit(
    rule_name: str,
    n: int,
    f: int,
    d: int,
    trials: int,
    seed: int,
    q: Optional[int],
    measure: bool,
    json_out: Optional[str],
) -> None:
    """Audit RULE against random adversarial instances."""
    if rule_name not in RULE_NAMES:
        raise click.BadParameter(f"unknown rule {rule_name!r}", param_hint="RULE")
    try:
        rule = Rule(rule_name, q=q)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="RULE/--q")
    claimed = None if measure or rule_name not in CERTIFIED_RULE_NAMES else "auto"
    try:
        report = randomized_audit(
            rule, n=n, f=f, d=d, trials=trials, rng=RngStream(seed),
            lambda_claimed=claimed,
        )
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    claimed_str = (
        "-" if report.lambda_claimed is None else f"{report.lambda_claimed:.6g}"
    )
    click.echo(
        f"rule={report.rule} n={n} f={f} d={d} trials={trials} "
        f"lambda_claimed={claimed_str} lambda_empirical={report.lambda_empirical:.6g} "
        f"violations={report.violations}"
    )
    if json_out:
        from .config import write_text_atomic

        write_text_atomic(json_out, report.to_json() + "\n")
    sys.exit(1 if report.violated else 0)


def _execute(args):
    run_id, run_cfg = args
    return run_id, run_cfg, run_simulation(run_cfg)


def _load(config_path: str) -> ExperimentConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@main.command(name="run")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), default=None)
def run_cmd(config_path: str, output_dir: Optional[str]) -> None:
    """Execute the single run described by a config (no sweep axes)."""
    cfg = _load(config_path)
    if not cfg.sweep.empty() or cfg.replicas != 1:
        click.echo(
            "error: config has sweep axes or replicas; use 'resam sweep'", err=True
        )
        sys.exit(2)
    out_dir = resolve_output_dir(output_dir, cfg)
    try:
        result = run_simulation(cfg.run)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    entry = write_run_outputs(out_dir, "run", cfg.run, result)
    click.echo(
        f"run written to {os.path.join(out_dir, entry['csv'])}"
        + (f" (diverged at step {result.diverged_at})" if result.diverged else "")
    )
    sys.exit(1 if result.diverged else 0)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option(
    "--jobs",
    type=int,
    default=None,
    help="Worker processes (default: logical cores).",
)
def sweep(config_path: str, output_dir: Optional[str], jobs: Optional[int]) -> None:
    """Execute every run of a sweep config and write an index."""
    cfg = _load(config_path)
    try:
        runs = expand_sweep(cfg)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    out_dir = resolve_output_dir(output_dir, cfg)
    if jobs is None:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(jobs, len(runs)))

    entries = []
    diverged = 0
    if jobs == 1:
        results = map(_execute, runs)
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_execute, runs)
    for run_id, run_cfg, result in results:
        entries.append(write_run_outputs(out_dir, run_id, run_cfg, result))
        if result.diverged:
            diverged += 1
    if jobs > 1:
        pool.shutdown()

    index = {"schema_version": SCHEMA_VERSION, "runs": entries}
    write_json_atomic(os.path.join(out_dir, "sweep.json"), index)
    click.echo(
        f"{len(entries)} runs written to {out_dir} ({diverged} diverged), "
        f"index at {os.path.join(out_dir, 'sweep.json')}"
    )
    sys.exit(0)


if __name__ == "__main__":
    main()
