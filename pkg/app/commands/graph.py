"""
app/commands/graph.py

scene-memory graph render|check|query over a saved scene graph.
"""

from pathlib import Path
from typing import Optional

import click

from app.commands.dependencies import EXIT_RUNTIME, SceneMemoryGroup, handle_errors
from app.services.scene_graph_service import check_graph, load, loads, serialize_to_prompt


@click.group(cls=SceneMemoryGroup)
def graph():
    """Inspect long-term memory files."""


@graph.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--max-contains", type=click.IntRange(min=1), default=None,
              help="List at most N objects per area, then '...'")
@handle_errors
def render(path: Path, max_contains: Optional[int]):
    """Print the prompt serialization."""
    click.echo(serialize_to_prompt(load(path), max_contains=max_contains))


@graph.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.pass_context
@handle_errors
def check(ctx: click.Context, path: Path):
    """Validate a scene-graph file; exits 2 when problems are found."""
    if not path.exists():
        raise FileNotFoundError(f"scene graph file not found: {path}")
    scene, problems = loads(path.read_text(encoding="utf-8"), strict=False)
    problems += check_graph(scene)
    if problems:
        for problem in problems:
            click.echo(problem, err=True)
        click.echo(f"{len(problems)} problem(s) in {path}")
        ctx.exit(EXIT_RUNTIME)
    click.echo(
        f"ok: {len(scene.floors)} floors, {len(scene.areas)} areas, "
        f"{len(scene.objects)} objects, {len(scene.edges)} edges"
    )


@graph.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.argument("a")
@click.argument("b")
@handle_errors
def query(path: Path, a: str, b: str):
    """Print whether areas A and B are navigable to each other."""
    click.echo("true" if load(path).navigable(a, b) else "false")
