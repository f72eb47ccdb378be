"""Snapshot files: the whole database as canonical UTF-8 text.

Layout::

    RXO-SNAPSHOT 1
    %CATALOG
    <one DDL statement per line>
    %DATA
    %RELATION <name> <count>
    <name:KIND>\t<name:KIND>...
    <tab-separated tuples>
    %OID <counter>

The same database always produces the same bytes.
"""

import logging
import os
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterator, List, Tuple, Union

from errors import ConstraintError, CounterError, FormatError, IoError, KindMismatch, LanguageError, RxOError
from catalog.registry import catalog_of, new_database
from kernel.database import Database, replace_body, scan_violations
from kernel.relation import Header, sorted_rows
from kernel.values import BaseKind, Kind, format_datetime, parse_datetime, parse_kind
from language.parser import parse_statement
from runtime.executor import execute

logger = logging.getLogger(__name__)

MAGIC = "RXO-SNAPSHOT 1"
NULL = "\\N"

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n"}


def escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape(text: str) -> str:
    out = []
    chars = iter(text)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        follower = next(chars, None)
        if follower not in _UNESCAPES:
            raise FormatError(f"bad escape sequence in {text!r}")
        out.append(_UNESCAPES[follower])
    return "".join(out)


def encode_value(kind: Kind, value: Any) -> str:
    if value is None:
        return NULL
    base = kind.base
    if base is BaseKind.STRING:
        return escape(value)
    if base is BaseKind.FLOAT:
        return repr(value)
    if base is BaseKind.DATETIME:
        return format_datetime(value)
    if base is BaseKind.BOOLEAN:
        return "true" if value else "false"
    return str(value)


def decode_value(kind: Kind, text: str) -> Any:
    if text == NULL:
        return None
    base = kind.base
    try:
        if base is BaseKind.STRING:
            return unescape(text)
        if base is BaseKind.FLOAT:
            return float(text)
        if base is BaseKind.DATETIME:
            return parse_datetime(text)
        if base is BaseKind.BOOLEAN:
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        return int(text)
    except (ValueError, KindMismatch):
        raise FormatError(f"{text!r} is not a {kind} value") from None


def encode_header(header: Header) -> str:
    return "\t".join(f"{escape(a.name)}:{a.kind}" for a in header)


def encode_row(header: Header, row) -> str:
    return "\t".join(encode_value(a.kind, v) for a, v in zip(header, row))


# Save

def dump_snapshot(db: Database) -> str:
    """Canonical snapshot text of ``db``."""
    lines = [MAGIC, "%CATALOG"]
    lines.extend(catalog_of(db).ddl)
    lines.append("%DATA")
    for name in sorted(db.relations):
        rel = db.relations[name].relation
        lines.append(f"%RELATION {name} {len(rel)}")
        lines.append(encode_header(rel.header))
        lines.extend(encode_row(rel.header, row) for row in sorted_rows(rel))
    lines.append(f"%OID {db.oid_counter}")
    return "\n".join(lines) + "\n"


def save_snapshot(db: Database, destination: Union[str, Path]) -> None:
    """Write the snapshot through a temporary file and an atomic rename."""
    path = Path(destination)
    text = dump_snapshot(db)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as fp:
                fp.write(text)
            os.replace(temp, path)
        except BaseException:
            if os.path.exists(temp):
                os.unlink(temp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None
    logger.info(f"saved snapshot {path} ({len(db.relations)} relations, oid counter {db.oid_counter})")


# Load

class _Lines:
    def __init__(self, text: str):
        if text and not text.endswith("\n"):
            raise FormatError("snapshot does not end with a newline")
        self.lines = text.split("\n")[:-1] if text else []
        self.position = 0

    def peek(self) -> str:
        if self.position >= len(self.lines):
            raise FormatError("unexpected end of snapshot")
        return self.lines[self.position]

    def take(self) -> str:
        line = self.peek()
        self.position += 1
        return line

    def expect(self, line: str) -> None:
        found = self.take()
        if found != line:
            raise FormatError(f"line {self.position}: expected {line!r}, found {found!r}")

    @property
    def done(self) -> bool:
        return self.position >= len(self.lines)


def _replay_catalog(lines: _Lines) -> Database:
    db = new_database()
    while not lines.peek().startswith("%"):
        source = lines.take()
        try:
            db = execute(db, parse_statement(source)).db
        except LanguageError as exc:
            raise FormatError(f"line {lines.position}: unreadable catalog statement: {exc.message}") from None
        except RxOError as exc:
            raise FormatError(f"line {lines.position}: catalog statement fails: {exc.message}") from None
    return db


def _read_header(line: str, where: str) -> Header:
    pairs = []
    for field in line.split("\t") if line else []:
        name, sep, kind = field.rpartition(":")
        if not sep:
            raise FormatError(f"{where}: bad header field {field!r}")
        try:
            pairs.append((unescape(name), parse_kind(kind)))
        except KindMismatch:
            raise FormatError(f"{where}: unknown kind {kind!r}") from None
    if not pairs:
        raise FormatError(f"{where}: empty header")
    return Header.of(*pairs)


def _read_relations(lines: _Lines) -> Iterator[Tuple[str, Header, List[Tuple[Any, ...]]]]:
    while lines.peek().startswith("%RELATION "):
        parts = lines.take().split(" ")
        if len(parts) != 3 or not parts[2].isdigit():
            raise FormatError(f"line {lines.position}: malformed relation line")
        name, count = parts[1], int(parts[2])
        header = _read_header(lines.take(), f"line {lines.position}")
        rows = []
        for _ in range(count):
            line = lines.take()
            fields = line.split("\t")
            if len(fields) != len(header):
                raise FormatError(f"line {lines.position}: expected {len(header)} fields, found {len(fields)}")
            rows.append(tuple(decode_value(a.kind, f) for a, f in zip(header, fields)))
        yield name, header, rows


def parse_snapshot(text: str) -> Database:
    """Rebuild a database from snapshot text."""
    lines = _Lines(text)
    if lines.done or lines.take() != MAGIC:
        raise FormatError("not an RxO snapshot (missing RXO-SNAPSHOT 1 header)")
    lines.expect("%CATALOG")
    db = _replay_catalog(lines)
    lines.expect("%DATA")
    seen = set()
    for name, header, rows in _read_relations(lines):
        if name not in db.relations:
            raise FormatError(f"relation {name} is not part of the catalog")
        if name in seen:
            raise FormatError(f"relation {name} appears twice")
        seen.add(name)
        if header != db.relations[name].header:
            raise FormatError(f"relation {name}: header {header} does not match the catalog")
        if len(set(rows)) != len(rows):
            raise ConstraintError(f"relation {name} holds duplicate tuples")
        try:
            db = replace_body(db, name, rows)
        except KindMismatch as exc:
            raise FormatError(f"relation {name}: {exc.message}") from None
    counter_line = lines.take()
    if not counter_line.startswith("%OID ") or not counter_line[5:].isdigit():
        raise FormatError(f"line {lines.position}: expected the %OID counter")
    if not lines.done:
        raise FormatError(f"line {lines.position + 1}: data after the %OID counter")
    counter = int(counter_line[5:])
    violations = scan_violations(db)
    if violations:
        raise ConstraintError(f"snapshot data violates the schema: {violations[0].message}")
    if counter < db.max_oid():
        raise CounterError(f"oid counter {counter} is below the largest stored OID {db.max_oid()}")
    return replace(db, oid_counter=counter)


def load_snapshot(source: Union[str, Path]) -> Database:
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IoError(f"no snapshot at {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    db = parse_snapshot(text)
    logger.info(f"loaded snapshot {path} ({len(db.relations)} relations, oid counter {db.oid_counter})")
    return db
