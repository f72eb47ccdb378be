"""Calculated components: query realizations and the procedure interpreter."""

import logging
from typing import Any, Dict, FrozenSet, Optional, Tuple

from errors import (
    CardinalityViolation,
    CyclicRealization,
    KindMismatch,
    NonCompilableBody,
    ProcedureNoReturn,
    UnknownName,
    UnrealizedComponent,
)
from catalog.model import MemberSpec, Realization, RealizationKind
from catalog.registry import active_realization, extent_classes, find_member, kind_of
from kernel.database import Database
from kernel.relation import Header, Relation, Row
from kernel.values import Kind, ref
from language import ast
from query.context import Env, QueryContext
from query.expressions import fit, truthy
from query.oview import HOST_ID, eval_per_host, evaluate_select, exact_hosts
from schema.storage import OID, root_name

logger = logging.getLogger(__name__)


def calculated_rows(ctx: QueryContext, exact: str, member: MemberSpec, realization: Realization) -> FrozenSet[Row]:
    """``(oid, values...)`` of a calculated component for every object of an exact class."""
    key = ("calc", exact, member.name)
    if key in ctx.cache:
        return ctx.cache[key]
    if (exact, member.name) in ctx.active:
        raise CyclicRealization(f"{exact}.{member.name} depends on its own value")
    ctx.active.add((exact, member.name))
    try:
        if realization.kind is RealizationKind.QUERY:
            rows = _query_rows(ctx, exact, member, realization.body)
        else:
            rows = _procedure_rows(ctx, exact, member, realization.body)
    finally:
        ctx.active.discard((exact, member.name))
    ctx.cache[key] = rows
    logger.debug(f"materialized {exact}.{member.name}: {len(rows)} rows")
    return rows


def _query_rows(ctx: QueryContext, exact: str, member: MemberSpec, select: ast.Select) -> FrozenSet[Row]:
    where = f"{exact}.{member.name}"
    result = evaluate_select(ctx, select, Env(host_class=exact, host=exact_hosts(ctx, exact)))
    outputs = [name for name in result.names if name != HOST_ID]
    targets = [member] if member.is_attribute else [m for m in member.members if m.is_attribute]
    if len(outputs) != len(targets):
        raise KindMismatch(f"{where}: the query yields {len(outputs)} columns, {len(targets)} expected")
    host = result.header.index(HOST_ID)
    positions = [result.header.index(name) for name in outputs]
    rows = frozenset(
        (row[host],) + tuple(fit(t.value_kind, row[p], where) for t, p in zip(targets, positions))
        for row in result.body
    )
    if member.is_attribute:
        seen = set()
        for row in rows:
            if row[0] in seen:
                raise CardinalityViolation(f"{where} has several values for object {row[0]}")
            seen.add(row[0])
    return rows


def _procedure_rows(ctx: QueryContext, exact: str, member: MemberSpec, block: ast.Block) -> FrozenSet[Row]:
    where = f"{exact}.{member.name}"
    return frozenset(
        (oid, fit(member.value_kind, ProcedureInterpreter(ctx, exact, oid).run(block), where))
        for (oid,) in exact_hosts(ctx, exact).body
    )


class ProcedureInterpreter:
    """Runs a calculated procedure for one object.

    Locals live in ``variables``; expressions see them as constants and the
    object's own components as bare names.
    """

    def __init__(self, ctx: QueryContext, class_name: str, oid: int, params: Optional[Dict[str, Tuple[Any, Kind]]] = None):
        self.ctx = ctx
        self.class_name = class_name
        self.oid = oid
        self.host = Relation(Header.of((HOST_ID, ref(class_name))), frozenset({(oid,)}))
        self.variables: Dict[str, Tuple[Any, Kind]] = dict(params or {})

    def run(self, block: ast.Block) -> Any:
        finished, value = self._execute(block)
        if not finished:
            raise ProcedureNoReturn(f"procedure of {self.class_name} ended without RETURN for object {self.oid}")
        return value

    def _execute(self, statement) -> Tuple[bool, Any]:
        if isinstance(statement, ast.Block):
            for inner in statement.statements:
                finished, value = self._execute(inner)
                if finished:
                    return True, value
            return False, None
        if isinstance(statement, ast.Declare):
            self.variables[statement.name] = (None, kind_of(statement.type))
            return False, None
        if isinstance(statement, ast.Assign):
            name = statement.target.segments[0].name
            if statement.target.anchor != "bare" or name not in self.variables:
                raise NonCompilableBody(f"a calculated procedure can only assign its local variables, not {name}")
            _, kind = self.variables[name]
            self.variables[name] = (fit(kind, self.value(statement.value), name), kind)
            return False, None
        if isinstance(statement, ast.If):
            if truthy(self.value(statement.condition)):
                return self._execute(statement.then)
            if statement.otherwise is not None:
                return self._execute(statement.otherwise)
            return False, None
        if isinstance(statement, ast.Return):
            return True, self.value(statement.value)
        raise NonCompilableBody(f"unsupported procedure statement {type(statement).__name__}")

    def value(self, expr) -> Any:
        env = Env(host_class=self.class_name, host=self.host, constants=dict(self.variables))
        values, _ = eval_per_host(self.ctx, expr, env)
        return values.get(self.oid)


def eval_calculated(db: Database, class_name: str, oid: int, member: str) -> Any:
    """Value of a calculated component for one object: a scalar, or a relation for a set."""
    ctx = QueryContext(db)
    spec = find_member(db, class_name, member)
    class_name = exact_class_of(db, class_name, oid)
    realization = active_realization(db, class_name, member)
    if realization is None or realization.kind is RealizationKind.STORED:
        raise UnrealizedComponent(f"{class_name}.{member} is not calculated")
    rows = [row for row in calculated_rows(ctx, class_name, spec, realization) if row[0] == oid]
    if spec.is_attribute:
        return rows[0][1] if rows else None
    attrs = [m for m in spec.members if m.is_attribute]
    header = Header.of(*((m.name, m.value_kind) for m in attrs))
    return Relation(header, frozenset(row[1:] for row in rows))


def exact_class_of(db: Database, class_name: str, oid: int) -> str:
    """The exact class of object ``oid`` within the extent of ``class_name``."""
    for exact in extent_classes(db, class_name):
        stored = db.relations.get(root_name(exact))
        if stored is not None and oid in stored.relation.column(OID):
            return exact
    raise UnknownName(f"no object {oid} in class {class_name}")
