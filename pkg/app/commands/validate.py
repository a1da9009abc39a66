"""
app/commands/validate.py

scene-memory validate-config: parse a run or sweep config and print it
normalized, without running anything.
"""

from pathlib import Path

import click

from app.commands.dependencies import handle_errors
from app.services.config_loader import is_sweep_config, load_run_config, load_sweep_config


@click.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@handle_errors
def validate_config(config_path: Path):
    """Print the normalized configuration as JSON."""
    if is_sweep_config(config_path):
        config = load_sweep_config(config_path)
        click.echo(config.model_dump_json(indent=2))
        click.echo(f"sweep config ok: {len(config.policy_points())} policy point(s)", err=True)
    else:
        config = load_run_config(config_path)
        click.echo(config.model_dump_json(indent=2))
        click.echo("run config ok", err=True)
