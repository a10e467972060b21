"""Command-line experiment harness.

    puredp run --config <file> [--seed N] [--out <path>]
    puredp validate --config <file>
    puredp list

Configs are YAML key-value files (experiment, seed, trials, params, out);
CLI flags override file keys.  Exit codes: 0 ok, 1 runtime failure,
2 usage error.
"""

from __future__ import annotations

import sys

import click
import yaml

from .csvio import write_csv
from .experiments import EXPERIMENTS, ConfigError, resolve_config

USAGE_EXIT = 2
RUNTIME_EXIT = 1


def _load_raw(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a key-value mapping")
    return raw


@click.group()
def main():
    """Purification experiment harness."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--out", type=click.Path(), default=None, help="Overrides the output path.")
def run(config_path: str, seed: int | None, out: str | None):
    """Run one experiment and write its CSV."""
    try:
        config = resolve_config(_load_raw(config_path), seed, out)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(USAGE_EXIT)

    exp = EXPERIMENTS[config.experiment]
    diagnostics = exp.validate(config.params, config.trials) if exp.validate else []
    if diagnostics:
        for diag in diagnostics:
            click.echo(f"invalid: {diag}", err=True)
        sys.exit(RUNTIME_EXIT)

    try:
        columns, rows = exp.run(config.params, config.seed, config.trials)
        write_csv(config.out, columns, rows, config.as_dict())
    except (ValueError, RuntimeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(RUNTIME_EXIT)
    click.echo(
        f"wrote {config.out}: {len(rows)} rows "
        f"({config.experiment}, seed {config.seed}, trials {config.trials})"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def validate(config_path: str):
    """Report violated preconditions without running."""
    try:
        config = resolve_config(_load_raw(config_path), None, None)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(USAGE_EXIT)
    exp = EXPERIMENTS[config.experiment]
    diagnostics = exp.validate(config.params, config.trials) if exp.validate else []
    if diagnostics:
        for diag in diagnostics:
            click.echo(f"invalid: {diag}")
        sys.exit(RUNTIME_EXIT)
    click.echo("ok")


@main.command(name="list")
def list_experiments():
    """List the available experiments."""
    for name in sorted(EXPERIMENTS):
        click.echo(name)


if __name__ == "__main__":
    main()
