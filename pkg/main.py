"""Command-line entry point for the RxO relational machine."""

import logging
import sys
from pathlib import Path
from typing import Optional

import click

from config import settings
from errors import RxOError
from shell.session import Session, repl as run_repl, run_script, run_text

logger = logging.getLogger(__name__)

db_option = click.option(
    "--db",
    "db_path",
    type=click.Path(dir_okay=False, path_type=Path),
    envvar="RXO_DB",
    default=None,
    help="Database snapshot file (created on first save).",
)


def _open(db_path: Optional[Path], **options) -> Session:
    try:
        return Session.open(db_path, **options)
    except RxOError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from RXO_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """RxO: an object-oriented language on a relational machine."""
    logging.basicConfig(
        level=(log_level or settings.log_level).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


@cli.command()
@db_option
@click.option("--no-autosave", is_flag=True, help="Save only on \\save.")
def repl(db_path: Optional[Path], no_autosave: bool):
    """Interactive shell."""
    session = _open(db_path, autosave=False if no_autosave else None)
    logger.info(f"repl on {session.db_path or 'an in-memory database'}")
    sys.exit(run_repl(session))


@cli.command()
@click.argument("script", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@db_option
def run(script: Path, db_path: Optional[Path]):
    """Execute a script of statements.

    Execution stops at the first failing statement; the statements before it
    are still saved to the database file.
    """
    session = _open(db_path)
    sys.exit(run_script(session, script))


@cli.command()
@click.argument("statement")
@db_option
@click.option("--format", "output_format", type=click.Choice(["table", "tsv"]), default=None)
def query(statement: str, db_path: Optional[Path], output_format: Optional[str]):
    """Execute statements given on the command line."""
    session = _open(db_path, output_format=output_format)
    sys.exit(0 if run_text(session, statement) else 1)


if __name__ == "__main__":
    cli()
