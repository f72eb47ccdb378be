"""Stored relations, constraints and the mutation primitives of the machine."""

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from errors import ConstraintViolation, ForeignKeyViolation, KeyViolation, UnknownRelation
from kernel.predicates import TRUE, Predicate
from kernel.relation import Header, Relation, Row, conform_row
from kernel.values import INT64_MAX, coerce

if TYPE_CHECKING:
    from catalog.model import Catalog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForeignKey:
    """``attrs`` values must occur as ``target_attrs`` in any of ``targets``."""
    attrs: Tuple[str, ...]
    targets: Tuple[str, ...]
    target_attrs: Tuple[str, ...]

    def __str__(self) -> str:
        return f"({', '.join(self.attrs)}) -> {' | '.join(self.targets)}({', '.join(self.target_attrs)})"


@dataclass(frozen=True)
class UniqueConstraint:
    """Uniqueness of ``attrs`` over the union of several relations.

    Value combinations containing a NULL never conflict.
    """
    name: str
    relations: Tuple[str, ...]
    attrs: Tuple[str, ...]


@dataclass(frozen=True)
class StoredRelation:
    name: str
    relation: Relation
    foreign_keys: Tuple[ForeignKey, ...] = ()

    @property
    def header(self) -> Header:
        return self.relation.header


@dataclass(frozen=True)
class Database:
    """The whole state: catalog, stored relations and the OID counter.

    A Database is a value; every operation returns a new one and leaves the
    previous value usable, which is how statements roll back.
    """
    relations: Mapping[str, StoredRelation] = field(default_factory=dict)
    uniques: Tuple[UniqueConstraint, ...] = ()
    oid_counter: int = 0
    catalog: Optional["Catalog"] = None

    def relation(self, name: str) -> StoredRelation:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownRelation(f"no stored relation {name!r}") from None

    def has_relation(self, name: str) -> bool:
        return name in self.relations

    def with_relation(self, stored: StoredRelation) -> "Database":
        relations = dict(self.relations)
        relations[stored.name] = stored
        return replace(self, relations=relations)

    def without_relation(self, name: str) -> "Database":
        relations = dict(self.relations)
        relations.pop(name, None)
        return replace(self, relations=relations)

    def allocate_oid(self) -> Tuple["Database", int]:
        oid = self.oid_counter + 1
        if oid > INT64_MAX:
            raise ConstraintViolation("OID space exhausted")
        return replace(self, oid_counter=oid), oid

    def max_oid(self) -> int:
        """Largest OID stored in any ``#oid`` attribute (0 when none)."""
        largest = 0
        for stored in self.relations.values():
            if "#oid" in stored.header:
                position = stored.header.index("#oid")
                for row in stored.relation.body:
                    if row[position] is not None and row[position] > largest:
                        largest = row[position]
        return largest


# Mutations

Assignment = Union[Any, Callable[[Mapping[str, Any]], Any]]


@dataclass(frozen=True)
class Insert:
    relation: str
    rows: Tuple[Union[Sequence[Any], Mapping[str, Any]], ...]


@dataclass(frozen=True)
class Update:
    """Set attributes on every tuple matching ``where``.

    A callable assignment receives the tuple (before the update) as a
    mapping from attribute name to value.
    """
    relation: str
    changes: Mapping[str, Assignment]
    where: Predicate = TRUE


@dataclass(frozen=True)
class Delete:
    relation: str
    where: Predicate = TRUE


Mutation = Union[Insert, Update, Delete]


def _apply_one(db: Database, m: Mutation) -> Database:
    stored = db.relation(m.relation)
    rel = stored.relation
    header = rel.header
    if isinstance(m, Insert):
        body = rel.body | frozenset(conform_row(header, row) for row in m.rows)
    elif isinstance(m, Delete):
        test = m.where.bind(header)
        body = frozenset(row for row in rel.body if not test(row))
    else:
        test = m.where.bind(header)
        targets = [(header.index(name), header.kind(name), value) for name, value in m.changes.items()]
        names = header.names
        body = set()
        for row in rel.body:
            if not test(row):
                body.add(row)
                continue
            before = dict(zip(names, row))
            values = list(row)
            for position, kind, value in targets:
                values[position] = coerce(kind, value(before) if callable(value) else value)
            body.add(tuple(values))
        body = frozenset(body)
    return db.with_relation(replace(stored, relation=Relation(header, body, rel.key)))


def apply_mutations(db: Database, mutations: Iterable[Mutation], check: bool = True) -> Database:
    """Apply mutations in order; constraints are checked once at the end.

    On a violation the exception propagates and ``db`` is untouched.
    """
    count = 0
    current = db
    for m in mutations:
        current = _apply_one(current, m)
        count += 1
    if check:
        check_constraints(current)
    logger.debug(f"applied {count} mutations")
    return current


def apply_mutation(db: Database, m: Mutation) -> Database:
    return apply_mutations(db, [m])


# Constraint checking

def _key_violations(stored: StoredRelation) -> List[ConstraintViolation]:
    rel = stored.relation
    if rel.key is None:
        return []
    positions = [rel.header.index(k) for k in rel.key]
    seen = set()
    found: List[ConstraintViolation] = []
    for row in rel.body:
        value = tuple(row[p] for p in positions)
        if any(v is None for v in value):
            found.append(KeyViolation(f"{stored.name}: NULL in key ({', '.join(rel.key)})"))
        elif value in seen:
            found.append(KeyViolation(f"{stored.name}: duplicate key ({', '.join(rel.key)}) = {_show(value)}"))
        seen.add(value)
    return found


def _show(value: Tuple[Any, ...]) -> str:
    return ", ".join(repr(v) for v in value)


def _target_values(db: Database, fk: ForeignKey) -> set:
    values = set()
    for target in fk.targets:
        if not db.has_relation(target):
            continue
        rel = db.relation(target).relation
        positions = [rel.header.index(a) for a in fk.target_attrs]
        values.update(tuple(row[p] for p in positions) for row in rel.body)
    return values


def _foreign_key_violations(db: Database, stored: StoredRelation) -> List[ConstraintViolation]:
    found: List[ConstraintViolation] = []
    rel = stored.relation
    for fk in stored.foreign_keys:
        positions = [rel.header.index(a) for a in fk.attrs]
        allowed = _target_values(db, fk)
        for row in rel.body:
            value = tuple(row[p] for p in positions)
            if any(v is None for v in value):
                continue
            if value not in allowed:
                found.append(ForeignKeyViolation(f"{stored.name}{fk}: no target for {_show(value)}"))
    return found


def _unique_violations(db: Database, unique: UniqueConstraint) -> List[ConstraintViolation]:
    found: List[ConstraintViolation] = []
    seen = set()
    for name in unique.relations:
        if not db.has_relation(name):
            continue
        rel = db.relation(name).relation
        positions = [rel.header.index(a) for a in unique.attrs]
        for row in rel.body:
            value = tuple(row[p] for p in positions)
            if any(v is None for v in value):
                continue
            if value in seen:
                found.append(KeyViolation(f"{unique.name}: duplicate ({', '.join(unique.attrs)}) = {_show(value)}"))
            seen.add(value)
    return found


def scan_violations(db: Database) -> List[ConstraintViolation]:
    """Full re-scan of every key, unique and foreign-key constraint."""
    found: List[ConstraintViolation] = []
    for name in sorted(db.relations):
        found.extend(_key_violations(db.relations[name]))
    for unique in db.uniques:
        found.extend(_unique_violations(db, unique))
    for name in sorted(db.relations):
        found.extend(_foreign_key_violations(db, db.relations[name]))
    return found


def check_constraints(db: Database) -> None:
    """Raise the first violation found by ``scan_violations``."""
    violations = scan_violations(db)
    if violations:
        logger.debug(f"{len(violations)} constraint violations, first: {violations[0].message}")
        raise violations[0]


def replace_body(db: Database, name: str, rows: Iterable[Row]) -> Database:
    """Swap the body of a stored relation without checking constraints."""
    stored = db.relation(name)
    rel = stored.relation
    body = frozenset(conform_row(rel.header, row) for row in rows)
    return db.with_relation(replace(stored, relation=Relation(rel.header, body, rel.key)))
