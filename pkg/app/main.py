"""
app/main.py

Command-line entry point: scene-memory <command>.

    simulate         one experiment from a run config
    sweep            a grid of experiments
    graph            render / check / query a saved scene graph
    validate-config  print a normalized run or sweep config
"""

import sys
from typing import List, Optional

import click
from dotenv import load_dotenv

from app.commands.dependencies import EXIT_OK, EXIT_USAGE, SceneMemoryGroup
from app.commands.graph import graph
from app.commands.simulate import simulate
from app.commands.sweep import sweep
from app.commands.validate import validate_config
from app.config import get_settings
from app.utils.logger import get_logger, setup_logger

load_dotenv()

settings = get_settings()
setup_logger("app", level=settings.LOG_LEVEL, format_type=settings.LOG_FORMAT)
logger = get_logger(__name__)


@click.group(cls=SceneMemoryGroup)
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
def cli():
    """Memory for task-planning agents: short-term store, scene graph and workload simulator."""


cli.add_command(simulate)
cli.add_command(sweep)
cli.add_command(graph)
cli.add_command(validate_config)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        # ctx.exit(code) comes back as the return value when not standalone
        result = cli.main(args=argv, prog_name=settings.APP_NAME, standalone_mode=False)
        if isinstance(result, int):
            return result
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
