"""
app/commands/dependencies.py

Shared pieces of the command layer: service construction, output-path
guards and the mapping from errors to exit codes (1 usage/config, 2 runtime).
"""

import functools
from pathlib import Path
from typing import Optional

import click

from app.config import get_settings
from app.services.embedding_service import Embedder, build_embedder
from app.utils.exceptions import ConfigurationError
from app.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageFailure(click.ClickException):
    exit_code = EXIT_USAGE


class RuntimeFailure(click.ClickException):
    exit_code = EXIT_RUNTIME


class SceneMemoryGroup(click.Group):
    """Click group whose own usage errors exit 1 instead of click's 2"""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


def handle_errors(func):
    """Translate service errors into click exceptions with the right exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except (ConfigurationError, FileNotFoundError) as e:
            logger.error(f"Configuration error: {e}")
            raise UsageFailure(str(e)) from e
        except Exception as e:
            logger.error(f"{func.__name__} failed: {e}", exc_info=True)
            raise RuntimeFailure(str(e)) from e

    return wrapper


def get_embedder(backend: str = "local") -> Embedder:
    settings = get_settings()
    if backend == "remote" and not settings.EMBED_ENDPOINT:
        raise ConfigurationError("EMBED_ENDPOINT is not set", key="EMBED_ENDPOINT")
    return build_embedder(settings, backend=backend)


def ensure_writable(path: Optional[Path], force: bool) -> None:
    """Refuse to overwrite an existing file or non-empty directory unless forced"""
    if path is None or force or not path.exists():
        return
    if path.is_dir() and not any(path.iterdir()):
        return
    raise UsageFailure(f"{path} already exists; pass --force to overwrite")
