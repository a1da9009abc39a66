"""
app/commands/simulate.py

scene-memory simulate: one experiment from a run config.
"""

from pathlib import Path
from typing import Optional

import click

from app.commands.dependencies import ensure_writable, get_embedder, handle_errors
from app.services.config_loader import load_run_config
from app.services.report_service import ReportService
from app.services.short_term_memory import ShortTermStore
from app.services.workload_service import build_policy, generate_stream, run_experiment
from app.utils.logger import get_logger

logger = get_logger(__name__)


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path), help="Run config (INI)")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="CSV output file (default: stdout)")
@click.option("--force", is_flag=True, help="Overwrite existing outputs")
@click.option("--seed", type=int, default=None, help="Override stream.seed")
@click.option("--trace", type=click.Path(path_type=Path), default=None, help="Write the eviction trace (JSON lines)")
@click.option("--embedder", type=click.Choice(["local", "remote"]), default="local", show_default=True)
@handle_errors
def simulate(config_path: Path, out: Optional[Path], force: bool, seed: Optional[int],
             trace: Optional[Path], embedder: str):
    """Run one experiment and write its CSV row."""
    config = load_run_config(config_path, seed=seed)
    out = out or config.output.out
    trace = trace or config.output.trace
    ensure_writable(out, force)
    ensure_writable(trace, force)

    policy = build_policy(config.policy, config.sketch, seed=config.stream.seed, trace=trace is not None)
    store = ShortTermStore(policy, embedder=get_embedder(embedder))
    stream = generate_stream(config.stream)
    report = run_experiment(stream, store, config.cost, k=config.k, memory=config.memory)

    frame = ReportService.reports_frame([report])
    summary = ReportService.describe(report)
    logger.info(summary)
    if out is None:
        click.echo(ReportService.to_csv_text(frame), nl=False)
    else:
        ReportService.write_csv(frame, out)
        click.echo(summary)

    if trace is not None:
        trace.parent.mkdir(parents=True, exist_ok=True)
        with trace.open("w", encoding="utf-8") as stream_out:
            lines = policy.write_trace(stream_out)
        logger.info(f"Wrote {lines} trace records to {trace}")
