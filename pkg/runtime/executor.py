"""Statement executor: one parsed statement against one database value."""

import logging
from dataclasses import dataclass
from typing import Optional

from errors import RxOError, UnknownComponent
from catalog.registry import class_spec_from_ast, define_class, realization_from_ast, record_ddl, register_realization
from kernel.database import Database
from kernel.relation import Relation
from language import ast
from query.context import Env, QueryContext
from query.oview import eval_constant, run_select, select_objects
from runtime.lifecycle import assign_components, delete_component, destroy_objects, insert_component, new_object
from runtime.methods import exec_method

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Outcome:
    """Result of a statement: the new database and, for SELECT, the rows."""
    db: Database
    relation: Optional[Relation] = None
    affected: int = 0
    message: str = ""


def _row_count(db: Database) -> int:
    return sum(len(stored.relation) for stored in db.relations.values())


def execute(db: Database, statement: ast.Statement) -> Outcome:
    """Run a statement; on error ``db`` is unchanged and the error carries the statement position."""
    try:
        outcome = _dispatch(db, statement)
    except RxOError as exc:
        raise exc.at(statement.pos)
    logger.debug(f"{type(statement).__name__}: {outcome.message}")
    return outcome


def _dispatch(db: Database, statement: ast.Statement) -> Outcome:
    if isinstance(statement, ast.Select):
        relation = run_select(db, statement)
        return Outcome(db, relation, len(relation), f"{len(relation)} rows")
    if isinstance(statement, ast.CreateClass):
        db = record_ddl(define_class(db, class_spec_from_ast(statement)), statement)
        return Outcome(db, message=f"class {statement.name} created")
    if isinstance(statement, ast.AlterRealize):
        for member, realization in realization_from_ast(db, statement):
            db = register_realization(db, statement.class_name, member, realization)
        db = record_ddl(db, statement)
        return Outcome(db, message=f"{statement.class_name}: realized {', '.join(statement.targets)}")
    if isinstance(statement, ast.New):
        db, oid = new_object(db, statement.expr.class_name, statement.expr.inits)
        return Outcome(db, affected=1, message=f"created {statement.expr.class_name} {oid}")
    if isinstance(statement, ast.Destroy):
        class_name, oids = select_objects(QueryContext(db), statement.target)
        db = destroy_objects(db, oids)
        return Outcome(db, affected=len(oids), message=f"destroyed {len(oids)} {class_name} objects")
    if isinstance(statement, ast.Exec):
        call = statement.call
        ctx = QueryContext(db)
        class_name, oids = select_objects(ctx, call.target)
        args = [eval_constant(ctx, arg)[0] for arg in call.args]
        db = exec_method(db, class_name, oids, call.method, args)
        return Outcome(db, affected=len(oids), message=f"{call.method} executed for {len(oids)} objects")
    if isinstance(statement, ast.Update):
        class_name, oids = select_objects(QueryContext(db), statement.target)
        assignments = []
        for init in statement.assignments:
            if init.target.anchor == "alias" or len(init.target.segments) != 1:
                raise UnknownComponent(f"UPDATE assigns components of {class_name} by name")
            assignments.append((init.target.segments[0].name, init.value))
        db = assign_components(db, class_name, oids, assignments, Env())
        return Outcome(db, affected=len(oids), message=f"updated {len(oids)} {class_name} objects")
    if isinstance(statement, ast.Insert):
        before = _row_count(db)
        db = insert_component(db, statement.target, statement.rows, statement.columns)
        added = _row_count(db) - before
        return Outcome(db, affected=added, message=f"inserted {added} rows")
    if isinstance(statement, ast.Delete):
        before = _row_count(db)
        db = delete_component(db, statement.target, statement.where)
        removed = before - _row_count(db)
        return Outcome(db, affected=removed, message=f"deleted {removed} rows")
    raise UnknownComponent(f"unsupported statement {type(statement).__name__}")
