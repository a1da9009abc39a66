"""
app/commands/sweep.py

scene-memory sweep: a grid of experiments.

Writes into --out:
  sweep.csv           one row per grid point
  series/<label>.csv  per-step hit rate and occupancy
  summary.csv         means per grid point across seeds
  trends.csv          RE-on-MHR fit and the capacity MHR ratio
"""

from pathlib import Path
from typing import Optional

import click

from app.commands.dependencies import ensure_writable, get_embedder, handle_errors
from app.services.config_loader import load_sweep_config
from app.services.report_service import SWEEP_COLUMNS, ReportService
from app.services.workload_service import sweep as run_sweep
from app.utils.logger import get_logger

logger = get_logger(__name__)


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path), help="Sweep config (INI)")
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--force", is_flag=True, help="Write into a non-empty output directory")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Parallel grid points")
@click.option("--seed", type=int, default=None, help="Run every grid point with this seed only")
@click.option("--embedder", type=click.Choice(["local", "remote"]), default="local", show_default=True)
@handle_errors
def sweep(config_path: Path, out: Path, force: bool, jobs: int, seed: Optional[int], embedder: str):
    """Run every grid point and write the tables."""
    config = load_sweep_config(config_path, seed=seed)
    ensure_writable(out, force)

    reports = run_sweep(config, jobs=jobs, embedder=get_embedder(embedder))

    ReportService.write_csv(ReportService.reports_frame(reports, SWEEP_COLUMNS), out / "sweep.csv")
    used = set()
    for report in reports:
        label = report.label()
        if label in used:
            label = f"{label}_{len(used)}"
        used.add(label)
        ReportService.write_csv(ReportService.series_frame(report), out / "series" / f"{label}.csv")
    ReportService.write_csv(ReportService.summary_frame(reports), out / "summary.csv")
    ReportService.write_csv(ReportService.trends_frame(reports), out / "trends.csv")

    for report in reports:
        click.echo(ReportService.describe(report))
    click.echo(f"{len(reports)} runs written to {out}")
