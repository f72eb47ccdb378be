"""Object lifecycle: NEW, DESTROY, component assignment and set-row DML.

Every operation takes a Database value and returns a new one. Constraints
are checked once at the end unless the caller passes ``check=False`` to
batch several operations into one statement.
"""

import logging
from collections import defaultdict
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from errors import (
    AssignToCalculated,
    KindMismatch,
    NotTraversable,
    UnknownComponent,
    UnrealizedComponent,
)
from catalog.model import MemberSpec, RealizationKind
from catalog.registry import active_realization, get_class, resolve_interface, step_into
from kernel.algebra import r_project, r_semijoin
from kernel.database import Database, Delete, Insert, Mutation, Update, apply_mutations, check_constraints
from kernel.predicates import In, one_of
from kernel.relation import Header, Relation
from kernel.values import ref
from language import ast
from query.calculated import exact_class_of
from query.context import Env, QueryContext
from query.expressions import fit
from query.oview import (
    HOST_ID,
    ROW_ID,
    eval_constant,
    eval_per_host,
    filter_rows,
    nested_rows,
    raw_column,
    resolve_rows,
    set_rows,
)
from schema.storage import OID, SetLayout, layout_for, root_name

logger = logging.getLogger(__name__)


def component(db: Database, class_name: str, name: str) -> MemberSpec:
    """A component of the class interface; methods and unknown names are rejected."""
    for m in resolve_interface(db, class_name):
        if m.name == name and m.is_component:
            return m
    raise UnknownComponent(f"class {class_name} has no component {name!r}")


def writable_attribute(db: Database, exact: str, name: str) -> MemberSpec:
    """A stored scalar or reference component of the exact class."""
    spec = component(db, exact, name)
    if not spec.is_attribute:
        raise KindMismatch(f"{exact}.{name} is a set; its rows are changed with INSERT and DELETE")
    realization = active_realization(db, exact, name)
    if realization is None:
        raise UnrealizedComponent(f"{exact}.{name} has no realization")
    if realization.kind is not RealizationKind.STORED:
        raise AssignToCalculated(f"{exact}.{name} is calculated and cannot be assigned")
    return spec


def group_by_class(db: Database, class_name: str, oids: Iterable[int]) -> Dict[str, List[int]]:
    """Selected OIDs grouped by exact class."""
    groups: Dict[str, List[int]] = defaultdict(list)
    for oid in sorted(oids):
        groups[exact_class_of(db, class_name, oid)].append(oid)
    return dict(groups)


def host_relation(exact: str, oids: Iterable[int]) -> Relation:
    return Relation(Header.of((HOST_ID, ref(exact))), frozenset((oid,) for oid in oids))


def _finish(db: Database, mutations: Sequence[Mutation], check: bool) -> Database:
    db = apply_mutations(db, mutations, check=False)
    if check:
        check_constraints(db)
    return db


# NEW

def new_object(
    db: Database,
    class_name: str,
    inits: Sequence[ast.Init] = (),
    env: Env = Env(),
    check: bool = True,
) -> Tuple[Database, int]:
    """Create one object; nested NEW values are created first and yield their OID."""
    get_class(db, class_name)
    for member in resolve_interface(db, class_name):
        if member.is_component and active_realization(db, class_name, member.name) is None:
            raise UnrealizedComponent(f"cannot create {class_name}: component {member.name} is not realized")
    root = root_name(class_name)
    if root not in db.relations:
        raise UnrealizedComponent(f"class {class_name} has no stored realization")

    values: Dict[str, Any] = {}
    for init in inits:
        if init.target.anchor == "alias" or len(init.target.segments) != 1:
            raise UnknownComponent(f"an initializer names one component of {class_name}")
        name = init.target.segments[0].name
        spec = writable_attribute(db, class_name, name)
        if isinstance(init.value, ast.NewExpr):
            db, value = new_object(db, init.value.class_name, init.value.inits, env, check=False)
        else:
            value, _ = eval_constant(QueryContext(db), init.value, env)
        values[name] = fit(spec.value_kind, value, f"{class_name}.{name}")

    db, oid = db.allocate_oid()
    db = _finish(db, [Insert(root, ({OID: oid, **values},))], check)
    logger.debug(f"created {class_name} object {oid}")
    return db, oid


# DESTROY

def destroy_objects(db: Database, oids: Iterable[int], check: bool = True) -> Database:
    """Remove objects with all their set rows; references to them become NULL."""
    gone = frozenset(oids)
    if not gone:
        return db
    mutations: List[Mutation] = []
    for name, stored in sorted(db.relations.items()):
        if OID in stored.header:
            mutations.append(Delete(name, In(OID, gone)))
    for name, stored in sorted(db.relations.items()):
        for attr in stored.header:
            if attr.name != OID and attr.kind.is_ref:
                mutations.append(Update(name, {attr.name: None}, In(attr.name, gone)))
    db = _finish(db, mutations, check)
    logger.debug(f"destroyed {len(gone)} objects")
    return db


# UPDATE

def assign_components(
    db: Database,
    class_name: str,
    oids: Iterable[int],
    assignments: Sequence[Tuple[str, Any]],
    env: Env = Env(),
    check: bool = True,
) -> Database:
    """Set stored attributes of the selected objects.

    Every value is computed per object against the state before the
    statement; expressions may use the object's own components.
    """
    start = QueryContext(db)
    mutations: List[Mutation] = []
    for exact, group in group_by_class(db, class_name, oids).items():
        host_env = Env(host_class=exact, host=host_relation(exact, group), constants=env.constants)
        changes = {}
        for name, expr in assignments:
            spec = writable_attribute(db, exact, name)
            values, _ = eval_per_host(start, expr, host_env)
            where = f"{exact}.{name}"
            fitted = {oid: fit(spec.value_kind, values.get(oid), where) for oid in group}
            changes[name] = _lookup(fitted)
        mutations.append(Update(root_name(exact), changes, In(OID, frozenset(group))))
    return _finish(db, mutations, check)


def _lookup(values: Dict[int, Any]):
    return lambda row: values[row[OID]]


def assign_component(
    db: Database,
    class_name: str,
    oids: Iterable[int],
    name: str,
    value_expr,
    env: Env = Env(),
    check: bool = True,
) -> Database:
    return assign_components(db, class_name, oids, [(name, value_expr)], env, check)


# INSERT / DELETE on set components

def _target_rows(ctx: QueryContext, path: ast.Path, env: Env):
    """Owner frame and current rows of the set a DML target path names.

    Returns (set step, set path, owner frame, owner scope, rows frame). The
    rows frame has the storage layout of the set: ``.#``, the parent key
    columns (``~p<i>``) for a nested set, then the attributes.
    """
    if len(path.segments) < 2:
        raise KindMismatch("the target must name a set component below its owner")
    head = ast.Path(path.anchor, path.segments[:-1], path.alias, path.pos)
    last = path.segments[-1]
    owners, scope, owner_path = resolve_rows(ctx, head, env)
    step = step_into(ctx.db, scope, last.name)
    if step.scope != "set":
        raise KindMismatch(f"{last.name} is not a set component")
    if scope.scope == "class":
        set_path = (last.name,)
        rows = r_semijoin(set_rows(ctx, scope.class_name, step.member), owners, [(ROW_ID, ROW_ID)])
    else:
        if len(owner_path) > 1:
            raise NotTraversable(f"{last.name} is nested too deeply to be changed")
        set_path = owner_path + (last.name,)
        on = [(ROW_ID, ROW_ID)] + [
            (f"~p{i}", raw_column("", scope.member.member(k))) for i, k in enumerate(scope.member.key)
        ]
        rows = r_semijoin(nested_rows(ctx, scope.class_name, set_path), owners, on)
    if last.predicate is not None:
        rows = r_project(filter_rows(ctx, rows, step, last.predicate, env, set_path), rows.names)
    return step, set_path, owners, scope, rows


def _stored_layout(db: Database, exact: str, set_path: Tuple[str, ...]) -> SetLayout:
    realization = active_realization(db, exact, set_path[0])
    if realization is None:
        raise UnrealizedComponent(f"{exact}.{set_path[0]} has no realization")
    if realization.kind is not RealizationKind.STORED:
        raise AssignToCalculated(f"{exact}.{set_path[0]} is calculated; its rows cannot be changed")
    return layout_for(db, exact, set_path)


def insert_component(
    db: Database,
    target: ast.Path,
    rows: Sequence[Sequence[Any]],
    columns: Sequence[str] = (),
    env: Env = Env(),
    check: bool = True,
) -> Database:
    """Add rows to a stored set component of every owner the target selects.

    Rows are value expressions, positional over the set's attributes or
    matched to ``columns``.
    """
    ctx = QueryContext(db)
    step, set_path, owners, scope, _ = _target_rows(ctx, target, env)
    attrs = [m for m in step.member.members if m.is_attribute]
    names = list(columns) if columns else [m.name for m in attrs]
    by_name = {m.name: m for m in attrs}
    for name in names:
        if name not in by_name:
            raise UnknownComponent(f"set {step.name} has no attribute {name!r}")
    values: List[Dict[str, Any]] = []
    for row in rows:
        if len(row) != len(names):
            raise KindMismatch(f"a row of {step.name} has {len(row)} values, {len(names)} expected")
        record = {}
        for name, expr in zip(names, row):
            value, _ = eval_constant(ctx, expr, env)
            record[name] = fit(by_name[name].value_kind, value, f"{step.name}.{name}")
        values.append(record)

    parent_keys: List[str] = []
    if scope.scope == "set":
        parent_keys = [raw_column("", scope.member.member(k)) for k in scope.member.key]
    positions = [owners.header.index(ROW_ID)] + [owners.header.index(c) for c in parent_keys]
    inserts: Dict[str, List[Dict[str, Any]]] = defaultdict(list)
    for owner in owners.body:
        oid = owner[positions[0]]
        layout = _stored_layout(db, exact_class_of(db, scope.class_name, oid), set_path)
        parent = {name: owner[p] for (name, _), p in zip(layout.parent_columns, positions[1:])}
        for record in values:
            inserts[layout.relation].append({OID: oid, **parent, **record})
    mutations = [Insert(name, tuple(batch)) for name, batch in sorted(inserts.items())]
    logger.debug(f"inserting {sum(len(b) for b in inserts.values())} rows into {step.name}")
    return _finish(db, mutations, check)


def delete_component(
    db: Database,
    target: ast.Path,
    where=None,
    env: Env = Env(),
    check: bool = True,
) -> Database:
    """Remove the rows of a stored set component that the target and ``where`` select.

    Rows of sets nested below the removed rows go with them.
    """
    ctx = QueryContext(db)
    step, set_path, _, _, rows = _target_rows(ctx, target, env)
    if where is not None:
        rows = r_project(filter_rows(ctx, rows, step, where, env, set_path), rows.names)
    position = rows.header.index(ROW_ID)
    doomed: Dict[str, Tuple[SetLayout, set]] = {}
    for row in rows.body:
        layout = _stored_layout(db, exact_class_of(db, step.class_name, row[position]), set_path)
        doomed.setdefault(layout.relation, (layout, set()))[1].add(tuple(row))
    mutations: List[Mutation] = []
    for name in sorted(doomed):
        layout, matched = doomed[name]
        mutations.extend(_cascade(db, layout, matched))
    return _finish(db, mutations, check)


def _cascade(db: Database, layout: SetLayout, matched: set) -> List[Mutation]:
    """Deletes for rows of ``layout`` (full stored tuples) and their nested rows."""
    if not matched:
        return []
    header = layout.header
    mutations: List[Mutation] = [Delete(layout.relation, one_of(header.names, matched))]
    identities = {tuple(row[header.index(c)] for c in layout.identity) for row in matched}
    for member in layout.nested:
        child = layout.child(member)
        stored = db.relation(child.relation).relation
        width = len(layout.identity)
        below = {row for row in stored.body if row[:width] in identities}
        mutations.extend(_cascade(db, child, below))
    return mutations
