"""Script runner and interactive loop over one database file."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import click

from config import settings
from errors import RxOError
from catalog.registry import class_names, describe_class, has_class, new_database
from kernel.database import Database
from language import ast
from language.parser import is_complete, iter_statements
from runtime.executor import Outcome, execute
from shell.formatting import format_listing, format_relation
from store.snapshot import load_snapshot, save_snapshot

logger = logging.getLogger(__name__)

Echo = Callable[..., None]

HELP = """\
Statements end with ';' and may span several lines.
  \\q               quit
  \\save            write the database file now
  \\classes         list classes
  \\tables          list stored relations and their sizes
  \\describe CLASS  members of a class and how they are realized
  \\help            this text"""


@dataclass
class Session:
    """One open database: its file, its current value and output preferences."""
    db_path: Optional[Path]
    db: Database
    autosave: bool = True
    output_format: str = "table"

    @classmethod
    def open(cls, db_path: Optional[Path] = None, autosave: Optional[bool] = None, output_format: Optional[str] = None) -> "Session":
        """Load ``db_path`` if it exists; a missing file starts an empty database."""
        db_path = db_path if db_path is not None else settings.db
        if db_path is not None and Path(db_path).exists():
            db = load_snapshot(db_path)
        else:
            db = new_database()
            if db_path is not None:
                logger.info(f"{db_path} does not exist yet; starting an empty database")
        return cls(
            Path(db_path) if db_path is not None else None,
            db,
            settings.autosave if autosave is None else autosave,
            output_format or settings.output_format,
        )

    def execute(self, statement: ast.Statement, save: Optional[bool] = None) -> Outcome:
        """Run one statement; mutating statements are saved when ``save`` (default: autosave) is on."""
        outcome = execute(self.db, statement)
        self.db = outcome.db
        if not isinstance(statement, ast.Select) and (self.autosave if save is None else save):
            self.save()
        return outcome

    def save(self) -> bool:
        if self.db_path is None:
            return False
        save_snapshot(self.db, self.db_path)
        return True

    def render(self, outcome: Outcome) -> str:
        if outcome.relation is not None:
            return format_relation(outcome.relation, self.output_format)
        return f"OK ({outcome.affected} rows affected)"


def run_text(session: Session, text: str, echo: Echo = click.echo, save: Optional[bool] = None) -> bool:
    """Execute every statement of ``text``; stops at the first error and reports it."""
    try:
        for statement in iter_statements(text):
            echo(session.render(session.execute(statement, save)))
    except RxOError as exc:
        echo(str(exc), err=True)
        return False
    return True


def run_script(session: Session, script: Path, echo: Echo = click.echo) -> int:
    """Run a script file; the successful prefix is saved even when a statement fails."""
    try:
        text = Path(script).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        echo(f"cannot read {script}: {exc}", err=True)
        return 1
    ok = run_text(session, text, echo, save=False)
    try:
        session.save()
    except RxOError as exc:
        echo(str(exc), err=True)
        return 1
    logger.info(f"ran {script}: {'ok' if ok else 'stopped at an error'}")
    return 0 if ok else 1


def _meta(session: Session, line: str, echo: Echo) -> bool:
    """Handle a backslash command; False means quit."""
    command, _, argument = line.strip().partition(" ")
    argument = argument.strip()
    if command == "\\q":
        return False
    if command == "\\help":
        echo(HELP)
    elif command == "\\save":
        try:
            echo(f"saved {session.db_path}" if session.save() else "no database file to save to")
        except RxOError as exc:
            echo(str(exc), err=True)
    elif command == "\\classes":
        for name in class_names(session.db):
            echo(name)
    elif command == "\\tables":
        rows = [(name, str(len(stored.relation))) for name, stored in sorted(session.db.relations.items())]
        echo(format_listing(["relation", "tuples"], rows))
    elif command == "\\describe":
        if not argument or not has_class(session.db, argument):
            echo(f"unknown class {argument!r}", err=True)
        else:
            echo(format_listing(["member", "declaration", "realization"], describe_class(session.db, argument)))
    else:
        echo(f"unknown command {command}; \\help lists the commands", err=True)
    return True


def repl(session: Session, read_line: Callable[[str], str] = input, echo: Echo = click.echo) -> int:
    """Read statements until ``\\q`` or end of input."""
    buffer: List[str] = []
    while True:
        try:
            line = read_line("...> " if buffer else "rxo> ")
        except EOFError:
            break
        except KeyboardInterrupt:
            buffer = []
            echo("")
            continue
        if not buffer and line.strip().startswith("\\"):
            if not _meta(session, line, echo):
                break
            continue
        if not buffer and not line.strip():
            continue
        buffer.append(line)
        text = "\n".join(buffer)
        if is_complete(text):
            buffer = []
            run_text(session, text, echo)
    return 0
