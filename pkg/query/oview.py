"""O-views: post-path expansion over stored and calculated components.

Rows travel in ordinary relations whose column names are post-paths. For
FROM rows the prefix is empty: ``.#`` is the current object's OID,
``.Name`` a scalar, ``.Bank.#`` a reference and ``.Bank.Name`` a scalar
reached through it. A joined set contributes ``.Items.#`` (the owner; NULL
when the object has no rows) and its attributes ``.Items.Art``. Host
objects use the ``@`` prefix, and ``@.#`` doubles as the lineage column
tying derived rows to the host they were computed for.

Only the post-paths an expression mentions are joined in.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from errors import (
    AggregateMisuse,
    CardinalityViolation,
    CycleDepthExceeded,
    DuplicateOutName,
    KindMismatch,
    NotTraversable,
    TerminalScalarPath,
    UnknownName,
    UnrealizedComponent,
)
from catalog.model import MemberKind, MemberSpec, RealizationKind
from catalog.registry import PathStep, active_realization, extent_classes, has_class, resolve_interface, step_into
from kernel.algebra import (
    AggregateSpec,
    r_aggregate,
    r_extend,
    r_join,
    r_left_join,
    r_product,
    r_project,
    r_rename,
    r_union_all,
)
from kernel.database import Database
from kernel.relation import Attribute, Header, Relation, Row
from kernel.values import BOOLEAN, INTEGER, STRING, Kind, ref
from language import ast
from language.parser import parse_expression, parse_path
from language.printer import format_expr, format_path
from query.context import HOST, ROWS, Env, QueryContext, local_column
from query.expressions import Slot, compile_expr, contains_aggregate, truthy, walk
from schema.storage import OID, layout_for, root_name

logger = logging.getLogger(__name__)

HOST_ID = HOST + ".#"
ROW_ID = ROWS + ".#"
UNIT = Relation(Header.of(("~", BOOLEAN)), frozenset({(True,)}))

PathKey = Tuple[ast.Segment, ...]


def segment_text(segment: ast.Segment) -> str:
    if segment.predicate is None:
        return segment.name
    return f"{segment.name}[{format_expr(segment.predicate)}]"


def column_of(prefix: str, segments: Sequence[ast.Segment]) -> str:
    return prefix + "".join("." + segment_text(s) for s in segments)


def raw_column(prefix: str, member: MemberSpec) -> str:
    """Column of a set attribute; references carry the ``.#`` suffix."""
    suffix = ".#" if member.kind is MemberKind.REFERENCE else ""
    return f"{prefix}.{member.name}{suffix}"


def class_scope(name: str) -> PathStep:
    return PathStep(name, "class", name, None)


def _has_member(db: Database, scope: PathStep, name: str) -> bool:
    if scope.scope == "class":
        return any(m.name == name for m in resolve_interface(db, scope.class_name))
    if scope.scope == "set":
        return scope.member.member(name) is not None
    return False


def _rows_where(rel: Relation, test) -> Relation:
    return Relation(rel.header, frozenset(row for row in rel.body if test(row)), rel.key)


# Extents and components

def _storing_classes(ctx: QueryContext, class_name: str) -> List[str]:
    return [e for e in extent_classes(ctx.db, class_name) if root_name(e) in ctx.db.relations]


def extent(ctx: QueryContext, class_name: str) -> Relation:
    """OIDs of the objects of a class and its descendants, as a ``.#`` frame."""
    key = ("extent", class_name)
    if key not in ctx.cache:
        header = Header.of((ROW_ID, ref(class_name)))
        parts = []
        for exact in _storing_classes(ctx, class_name):
            stored = ctx.db.relations[root_name(exact)]
            position = stored.header.index(OID)
            parts.append(Relation(header, frozenset((row[position],) for row in stored.relation.body)))
        ctx.cache[key] = r_union_all(header, parts)
    return ctx.cache[key]


def exact_hosts(ctx: QueryContext, exact: str) -> Relation:
    """Objects of exactly one class, as an ``@.#`` host relation."""
    header = Header.of((HOST_ID, ref(exact)))
    stored = ctx.db.relations.get(root_name(exact))
    if stored is None:
        return Relation.empty(header)
    position = stored.header.index(OID)
    return Relation(header, frozenset((row[position],) for row in stored.relation.body))


def _exact_rows(ctx: QueryContext, exact: str, member: MemberSpec) -> FrozenSet[Row]:
    """``(oid, values...)`` tuples of one component for the objects of an exact class."""
    realization = active_realization(ctx.db, exact, member.name)
    if realization is None:
        raise UnrealizedComponent(f"{exact}.{member.name} has no realization")
    if realization.kind is RealizationKind.STORED:
        if member.kind is MemberKind.SET:
            stored = ctx.db.relation(layout_for(ctx.db, exact, (member.name,)).relation)
            names = (OID,) + tuple(m.name for m in member.members if m.is_attribute)
        else:
            stored = ctx.db.relation(root_name(exact))
            names = (OID, member.name)
        return r_project(stored.relation, names).body
    from query.calculated import calculated_rows
    return calculated_rows(ctx, exact, member, realization)


def attribute_values(ctx: QueryContext, class_name: str, member: MemberSpec) -> Relation:
    """``(#, value)`` of a scalar or reference component over the extent."""
    key = ("attr", class_name, member.name)
    if key not in ctx.cache:
        header = Header.of(("#", ref(class_name)), ("value", member.value_kind))
        body = set()
        for exact in _storing_classes(ctx, class_name):
            body.update(_exact_rows(ctx, exact, member))
        ctx.cache[key] = Relation(header, frozenset(body))
    return ctx.cache[key]


def set_rows(ctx: QueryContext, class_name: str, member: MemberSpec) -> Relation:
    """Rows of a set component over the extent, as a frame whose ``.#`` is the owner."""
    key = ("set", class_name, member.name)
    if key not in ctx.cache:
        attrs = [Attribute(ROW_ID, ref(class_name))]
        attrs += [Attribute(raw_column(ROWS, m), m.value_kind) for m in member.members if m.is_attribute]
        body = set()
        for exact in _storing_classes(ctx, class_name):
            body.update(_exact_rows(ctx, exact, member))
        ctx.cache[key] = Relation(Header(tuple(attrs)), frozenset(body))
    return ctx.cache[key]


def nested_rows(ctx: QueryContext, class_name: str, path: Tuple[str, ...]) -> Relation:
    """Rows of a nested set; ``~p<i>`` columns carry the parent row's key."""
    key = ("nested", class_name, path)
    if key not in ctx.cache:
        layout = layout_for(ctx.db, class_name, path)
        attrs = [Attribute(ROW_ID, ref(class_name))]
        attrs += [Attribute(f"~p{i}", kind) for i, (_, kind) in enumerate(layout.parent_columns)]
        attrs += [Attribute(raw_column(ROWS, m), m.value_kind) for m in layout.attributes]
        body = set()
        for exact in _storing_classes(ctx, class_name):
            realization = active_realization(ctx.db, exact, path[0])
            if realization is None:
                raise UnrealizedComponent(f"{exact}.{path[0]} has no realization")
            if realization.kind is not RealizationKind.STORED:
                continue
            exact_layout = layout_for(ctx.db, exact, path)
            stored = ctx.db.relation(exact_layout.relation)
            body.update(r_project(stored.relation, exact_layout.header.names).body)
        ctx.cache[key] = Relation(Header(tuple(attrs)), frozenset(body))
    return ctx.cache[key]


def select_oids(ctx: QueryContext, class_name: str, predicate) -> FrozenSet[int]:
    """OIDs of the extent for which ``predicate`` holds for some expansion row."""
    key = ("select", class_name, predicate)
    if key not in ctx.cache:
        frame = filter_rows(ctx, extent(ctx, class_name), class_scope(class_name), predicate, Env())
        ctx.cache[key] = frozenset(frame.column(ROW_ID))
    return ctx.cache[key]


# Expansion

def expand(
    ctx: QueryContext,
    rel: Relation,
    prefix: str,
    scope: PathStep,
    paths: Iterable[PathKey],
    set_path: Tuple[str, ...] = (),
) -> Relation:
    """Join the columns of ``paths`` (relative to ``prefix``) onto ``rel``."""
    tree: Dict[ast.Segment, dict] = {}
    for segments in paths:
        node = tree
        for segment in segments:
            node = node.setdefault(segment, {})
    return _expand(ctx, rel, prefix, scope, tree, set_path, 0)


def _expand(ctx, rel, prefix, scope, tree, set_path, depth) -> Relation:
    for segment, subtree in tree.items():
        if segment.name == "#":
            if segment.predicate is not None or subtree:
                raise NotTraversable(f"{prefix}.# is an OID and cannot be traversed")
            continue
        step = step_into(ctx.db, scope, segment.name)
        here = prefix + "." + segment_text(segment)
        child_path = set_path
        if step.scope == "scalar":
            if segment.predicate is not None:
                raise NotTraversable(f"{segment.name} is a scalar and cannot carry a selection")
            if scope.scope == "class":
                rel = _join_attribute(ctx, rel, prefix, scope, step, here)
        elif step.scope == "class":
            if scope.scope == "class":
                rel = _join_attribute(ctx, rel, prefix, scope, step, here + ".#", segment.predicate)
            elif segment.predicate is not None:
                rel = _select_reference(ctx, rel, f"{prefix}.{segment.name}.#", here + ".#", step, segment.predicate)
        elif scope.scope == "class":
            child_path = (segment.name,)
            rel = _join_set(ctx, rel, prefix, scope, step, here, segment.predicate)
        else:
            child_path = set_path + (segment.name,)
            rel = _join_nested(ctx, rel, prefix, scope, step, here, child_path, segment.predicate)
        if not subtree:
            continue
        if step.scope == "class":
            if depth >= ctx.max_depth:
                raise CycleDepthExceeded(f"{here} goes deeper than {ctx.max_depth} references")
            rel = _expand(ctx, rel, here, step, subtree, (), depth + 1)
        else:
            rel = _expand(ctx, rel, here, step, subtree, child_path, depth)
    return rel


def _join_attribute(ctx, rel, prefix, scope, step, column, predicate=None) -> Relation:
    if column in rel.header:
        return rel
    values = attribute_values(ctx, scope.class_name, step.member)
    if predicate is not None:
        allowed = select_oids(ctx, step.class_name, predicate)
        values = Relation(values.header, frozenset((o, v if v in allowed else None) for o, v in values.body))
    right = r_rename(values, {"#": "~k", "value": column})
    joined = r_left_join(rel, right, [(prefix + ".#", "~k")])
    return r_project(joined, rel.names + (column,))


def _select_reference(ctx, rel, source, column, step, predicate) -> Relation:
    if column in rel.header:
        return rel
    allowed = select_oids(ctx, step.class_name, predicate)
    position = rel.header.index(source)
    return r_extend(rel, column, rel.header.kind(source), lambda row: row[position] if row[position] in allowed else None)


def _attach(rel: Relation, rows: Relation, on: Sequence[Tuple[str, str]], here: str) -> Relation:
    """Left-join a frame of set rows, renaming its visible columns under ``here``."""
    names = rows.names
    visible = [c for c in names if not c.startswith("~")]
    keys = [names.index(right) for _, right in on]
    shown = [names.index(c) for c in visible]
    header = Header(
        tuple(Attribute(f"~k{i}", rows.header.kind(right)) for i, (_, right) in enumerate(on))
        + tuple(Attribute(here + c, rows.header.kind(c)) for c in visible)
    )
    body = frozenset(tuple(row[p] for p in keys) + tuple(row[p] for p in shown) for row in rows.body)
    joined = r_left_join(rel, Relation(header, body), [(left, f"~k{i}") for i, (left, _) in enumerate(on)])
    return r_project(joined, rel.names + tuple(here + c for c in visible))


def _join_set(ctx, rel, prefix, scope, step, here, predicate) -> Relation:
    if here + ".#" in rel.header:
        return rel
    rows = set_rows(ctx, scope.class_name, step.member)
    if predicate is not None:
        rows = filter_rows(ctx, rows, step, predicate, Env(), (step.name,))
    return _attach(rel, rows, [(prefix + ".#", ROW_ID)], here)


def _join_nested(ctx, rel, prefix, scope, step, here, path, predicate) -> Relation:
    if here + ".#" in rel.header:
        return rel
    rows = nested_rows(ctx, scope.class_name, path)
    if predicate is not None:
        rows = filter_rows(ctx, rows, step, predicate, Env(), path)
    parent = scope.member
    on = [(prefix + ".#", ROW_ID)]
    on += [(raw_column(prefix, parent.member(k)), f"~p{i}") for i, k in enumerate(parent.key)]
    return _attach(rel, rows, on, here)


def full_paths(ctx: QueryContext, scope: PathStep, depth: int = 0) -> List[PathKey]:
    """Every post-path below ``scope``, following references up to the depth bound."""
    if scope.scope == "class":
        members = [m for m in resolve_interface(ctx.db, scope.class_name) if m.is_component]
    else:
        members = list(scope.member.members)
    paths: List[PathKey] = [(ast.Segment("#"),)]
    for member in members:
        head = (ast.Segment(member.name),)
        step = step_into(ctx.db, scope, member.name)
        paths.append(head)
        if step.scope == "class":
            if depth >= ctx.max_depth:
                raise CycleDepthExceeded(
                    f"the O-view of {scope.class_name} nests references deeper than {ctx.max_depth}"
                )
            paths.extend(head + sub for sub in full_paths(ctx, step, depth + 1))
        elif step.scope == "set":
            paths.extend(head + sub for sub in full_paths(ctx, step, depth))
    return paths


# Name binding

@dataclass(frozen=True)
class Binding:
    """Where a value path lives; ``origin`` is const, local, host, rows or object."""
    origin: str
    segments: PathKey = ()
    column: Optional[str] = None
    kind: Optional[Kind] = None
    value: Any = None


def _relative(ctx: QueryContext, origin: str, prefix: str, scope: PathStep, segments: PathKey) -> Binding:
    step = scope
    for segment in segments:
        step = step_into(ctx.db, step, segment.name)
    column = column_of(prefix, segments)
    if step.scope == "scalar":
        return Binding(origin, segments, column, step.kind)
    if step.scope == "class":
        return Binding(origin, segments, column + ".#", ref(step.class_name))
    raise KindMismatch(f"{column} is a set and cannot be used as a value")


def bind_path(ctx: QueryContext, path: ast.Path, env: Env) -> Binding:
    """Resolve a value path.

    Bare names are tried as variables, then host components, then FROM row
    components, then class names.
    """
    db = ctx.db
    segments = path.segments
    if path.anchor == "alias":
        if env.scope is None or path.alias != env.alias:
            raise UnknownName(f"unknown alias {path.alias}")
        return _relative(ctx, "rows", ROWS, env.scope, segments)
    if path.anchor == "dot":
        if env.scope is not None:
            return _relative(ctx, "rows", ROWS, env.scope, segments)
        if env.host_class is not None:
            return _relative(ctx, "host", HOST, env.host_scope, segments)
        raise UnknownName(f"{format_path(path)} has no current row to refer to")
    first = segments[0]
    if first.predicate is None and (first.name in env.constants or first.name in env.host_locals):
        if len(segments) > 1:
            raise NotTraversable(f"{first.name} is a variable and has no components")
        if first.name in env.constants:
            value, kind = env.constants[first.name]
            return Binding("const", kind=kind, value=value)
        return Binding("local", column=local_column(first.name), kind=env.host_locals[first.name])
    if env.host_class is not None and _has_member(db, env.host_scope, first.name):
        return _relative(ctx, "host", HOST, env.host_scope, segments)
    if env.scope is not None and _has_member(db, env.scope, first.name):
        return _relative(ctx, "rows", ROWS, env.scope, segments)
    if has_class(db, first.name):
        return Binding("object", segments)
    raise UnknownName(f"{first.name!r} is not a variable, component or class here")


def object_value(ctx: QueryContext, path: ast.Path, env: Env) -> Tuple[Any, Kind]:
    """The single value a class-anchored path denotes (NULL when it selects nothing)."""
    plain = env.without_host()
    try:
        frame, scope, _ = resolve_rows(ctx, path, plain)
        if scope.scope != "class":
            raise KindMismatch(f"{format_path(path)} denotes set rows, not a value")
        values = set(frame.column(ROW_ID))
        kind = ref(scope.class_name)
    except TerminalScalarPath:
        head = replace(path, segments=path.segments[:-1])
        frame, scope, set_path = resolve_rows(ctx, head, plain)
        binding = _relative(ctx, "rows", ROWS, scope, path.segments[-1:])
        wide = expand(ctx, frame, ROWS, scope, [binding.segments], set_path)
        values = set(wide.column(binding.column))
        kind = binding.kind
    values.discard(None)
    if len(values) > 1:
        raise CardinalityViolation(f"{format_path(path)} selects {len(values)} values where one is expected")
    return (next(iter(values)) if values else None), kind


# Rows of a source path

def resolve_rows(ctx: QueryContext, path: ast.Path, env: Env) -> Tuple[Relation, PathStep, Tuple[str, ...]]:
    """Rows denoted by a source path.

    Returns the frame, the scope its rows belong to and, for set rows, the
    set names from the owning class down. Rows derived from the host carry
    the ``@.#`` lineage column.
    """
    segments = path.segments
    if path.anchor == "alias" or not segments:
        raise UnknownName(f"{format_path(path)} cannot be used as a source of rows")
    first = segments[0]
    from_host = env.host_class is not None and (
        path.anchor == "dot" or _has_member(ctx.db, env.host_scope, first.name)
    )
    if from_host:
        frame = r_project(env.host, [HOST_ID])
        prefix, scope, remaining = HOST, env.host_scope, segments
    else:
        if path.anchor == "dot":
            raise UnknownName(f"{format_path(path)} has no current object to start from")
        if not has_class(ctx.db, first.name):
            raise UnknownName(f"{first.name!r} is neither a class nor a component in this context")
        scope = class_scope(first.name)
        frame = extent(ctx, first.name)
        if first.predicate is not None:
            frame = filter_rows(ctx, frame, scope, first.predicate, env)
        prefix, remaining = ROWS, segments[1:]
    set_path: Tuple[str, ...] = ()
    for segment in remaining:
        frame, scope, set_path = _step(ctx, frame, prefix, scope, segment, set_path, env)
        prefix = ROWS
    return frame, scope, set_path


def _step(ctx, frame, prefix, scope, segment, set_path, env):
    if segment.name == "#":
        raise TerminalScalarPath("# is an OID and not a source of rows")
    step = step_into(ctx.db, scope, segment.name)
    if step.scope == "scalar":
        raise TerminalScalarPath(f"{segment.name} is a scalar; a source path must end in objects or set rows")
    lineage = (HOST_ID,) if HOST_ID in frame.header else ()
    here = prefix + "." + segment.name
    wide = _expand(ctx, frame, prefix, scope, {ast.Segment(segment.name): {}}, set_path, 0)
    presence = wide.header.index(here + ".#")
    wide = _rows_where(wide, lambda row: row[presence] is not None)
    if step.scope == "class":
        out = r_rename(r_project(wide, lineage + (here + ".#",)), {here + ".#": ROW_ID})
        next_path: Tuple[str, ...] = ()
    else:
        columns = tuple(c for c in wide.names if c.startswith(here + "."))
        out = r_rename(r_project(wide, lineage + columns), {c: c[len(here):] for c in columns})
        next_path = set_path + (segment.name,) if scope.scope == "set" else (segment.name,)
    if segment.predicate is not None:
        out = filter_rows(ctx, out, step, segment.predicate, env, next_path)
    return out, step, next_path


# Expression preparation

@dataclass
class Prepared:
    """A row relation carrying every column the expressions need."""
    wide: Relation
    slots: Dict[Any, Slot]
    host: Optional[Relation] = None


def prepare(
    ctx: QueryContext,
    frame: Optional[Relation],
    env: Env,
    exprs: Sequence[Any],
    extra_paths: Sequence[PathKey] = (),
) -> Prepared:
    """Bind the leaves of ``exprs`` and join the columns they need onto ``frame``.

    Without a frame the rows are the host objects (or a single empty row).
    """
    slots: Dict[Any, Slot] = {}
    rows_paths: List[PathKey] = list(extra_paths)
    host_paths: List[PathKey] = []
    subselects: List[ast.SubSelect] = []
    uses_host = False
    for expr in exprs:
        for node in walk(expr):
            if node in slots:
                continue
            if isinstance(node, ast.Path):
                binding = bind_path(ctx, node, env)
                if binding.origin == "const":
                    slots[node] = Slot(None, binding.kind, binding.value)
                elif binding.origin == "object":
                    value, kind = object_value(ctx, node, env)
                    slots[node] = Slot(None, kind, value)
                else:
                    slots[node] = Slot(binding.column, binding.kind)
                    if binding.origin == "rows":
                        rows_paths.append(binding.segments)
                    else:
                        uses_host = True
                        if binding.origin == "host":
                            host_paths.append(binding.segments)
            elif isinstance(node, ast.SubSelect):
                subselects.append(node)
                slots[node] = Slot(None, None)

    attached = []
    for number, node in enumerate(subselects):
        inner = Env(env.host_class, env.host, env.constants, env.host_locals)
        result = evaluate_select(ctx.snapshot or ctx, node.select, inner)
        outputs = [c for c in result.names if c != HOST_ID]
        if len(outputs) != 1:
            raise KindMismatch("a sub-select used as a value must produce exactly one column")
        kind = result.header.kind(outputs[0])
        if HOST_ID in result.header:
            column = f"{HOST}~s{number}"
            _one_per_host(result, outputs[0])
            attached.append((column, result, outputs[0]))
            slots[node] = Slot(column, kind)
            uses_host = True
        else:
            values = result.column(outputs[0])
            if len(values) > 1:
                raise CardinalityViolation(f"sub-select yields {len(values)} rows where one is expected")
            slots[node] = Slot(None, kind, values[0] if values else None)

    wide = frame
    if frame is not None and rows_paths:
        wide = expand(ctx, frame, ROWS, env.scope, rows_paths, env.set_path)
    host = None
    if env.host is not None and (uses_host or frame is None):
        host = expand(ctx, env.host, HOST, env.host_scope, host_paths)
        for column, result, output in attached:
            right = r_rename(r_project(result, [HOST_ID, output]), {HOST_ID: "~k", output: column})
            host = r_project(r_left_join(host, right, [(HOST_ID, "~k")]), host.names + (column,))
        if wide is None:
            wide = host
        elif HOST_ID in wide.header:
            joined = r_join(wide, host, [(HOST_ID, HOST_ID)])
            wide = r_project(joined, wide.names + tuple(c for c in host.names if c != HOST_ID))
        else:
            wide = r_product(host, wide)
    if wide is None:
        wide = UNIT
    return Prepared(wide, slots, host)


def _one_per_host(result: Relation, output: str) -> None:
    seen = set()
    position = result.header.index(HOST_ID)
    for row in result.body:
        if row[position] in seen:
            raise CardinalityViolation(f"sub-select yields several rows for object {row[position]}")
        seen.add(row[position])


def _condition(expr, wide: Relation, slots: Dict[Any, Slot]):
    test, kind = compile_expr(expr, wide.header, slots)
    if kind is not None and kind != BOOLEAN:
        raise KindMismatch(f"{format_expr(expr)} is not a condition")
    return lambda row: truthy(test(row))


def filter_rows(
    ctx: QueryContext,
    frame: Relation,
    scope: PathStep,
    predicate,
    env: Env,
    set_path: Tuple[str, ...] = (),
) -> Relation:
    """Rows of ``frame`` for which ``predicate`` holds on some expansion row."""
    prepared = prepare(ctx, frame, env.with_rows(scope, None, set_path), [predicate])
    kept = _rows_where(prepared.wide, _condition(predicate, prepared.wide, prepared.slots))
    names = frame.names
    if HOST_ID in kept.header and HOST_ID not in names:
        names = names + (HOST_ID,)
    return r_project(kept, names)


# SELECT

def evaluate_select(ctx: QueryContext, select: ast.Select, env: Env = Env()) -> Relation:
    """Evaluate a SELECT; with a host the result is keyed by ``@.#``."""
    frame, scope, set_path = resolve_rows(ctx, select.source, env)
    env = env.with_rows(scope, select.alias, set_path)
    exprs = [item.expr for item in select.items] + list(select.group_by)
    if select.where is not None:
        exprs.append(select.where)
    star = full_paths(ctx, scope) if select.star else []
    prepared = prepare(ctx, frame, env, exprs, star)
    wide = prepared.wide
    if select.where is not None:
        wide = _rows_where(wide, _condition(select.where, wide, prepared.slots))
    correlated = HOST_ID in wide.header
    lead = (HOST_ID,) if correlated else ()
    if select.star:
        columns = tuple(c for c in wide.names if c.startswith(".") and not c.endswith("#")) or (ROW_ID,)
        result = r_project(wide, lead + columns)
    else:
        result = _project_items(select, wide, prepared, env, correlated)
    if env.host is not None and not correlated:
        result = r_product(r_project(env.host, [HOST_ID]), result)
    logger.debug(f"select from {format_path(select.source)}: {len(result)} rows")
    return result


def output_names(select: ast.Select) -> List[str]:
    names = [item.alias or format_expr(item.expr) for item in select.items]
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicateOutName(f"output column {name!r} appears twice")
        seen.add(name)
    return names


def _project_items(select, wide, prepared, env, correlated) -> Relation:
    names = output_names(select)
    aggregates = list(dict.fromkeys(
        node for item in select.items for node in walk(item.expr) if isinstance(node, ast.Aggregate)
    ))
    rel, slots = wide, prepared.slots
    if aggregates or select.group_by:
        rel, slots = _aggregate(select, wide, prepared, env, aggregates, correlated)
    outputs = []
    for number, item in enumerate(select.items):
        fn, kind = compile_expr(item.expr, rel.header, slots)
        rel = r_extend(rel, f"~o{number}", kind or STRING, fn)
        outputs.append(f"~o{number}")
    lead = (HOST_ID,) if correlated else ()
    return r_rename(r_project(rel, lead + tuple(outputs)), dict(zip(outputs, names)))


def _aggregate(select, wide, prepared, env, aggregates, correlated):
    host_columns = [c for c in wide.names if c.startswith(HOST)]
    slots = {
        node: slot for node, slot in prepared.slots.items()
        if slot.column is None or slot.column.startswith(HOST)
    }
    group_columns = list(host_columns)
    for number, expr in enumerate(select.group_by):
        if contains_aggregate(expr):
            raise AggregateMisuse("GROUP BY cannot contain aggregates")
        fn, kind = compile_expr(expr, wide.header, prepared.slots)
        wide = r_extend(wide, f"~g{number}", kind or STRING, fn)
        group_columns.append(f"~g{number}")
        slots[expr] = Slot(f"~g{number}", kind or STRING)
    specs = []
    for number, node in enumerate(aggregates):
        if node.arg is None:
            specs.append(AggregateSpec("COUNT", None, f"~a{number}"))
            continue
        if contains_aggregate(node.arg):
            raise AggregateMisuse("aggregates cannot be nested")
        fn, kind = compile_expr(node.arg, wide.header, prepared.slots)
        wide = r_extend(wide, f"~i{number}", kind or INTEGER, fn)
        specs.append(AggregateSpec(node.fn.upper(), f"~i{number}", f"~a{number}"))
    grouped = r_aggregate(wide, group_columns, specs)
    if correlated and not select.group_by:
        hosts = prepared.host if prepared.host is not None else r_project(env.host, [HOST_ID])
        grouped = _fill_hosts(grouped, hosts, host_columns, specs)
    for number, node in enumerate(aggregates):
        slots[node] = Slot(f"~a{number}", grouped.header.kind(f"~a{number}"))
    return grouped, slots


def _fill_hosts(grouped: Relation, hosts: Relation, host_columns: List[str], specs) -> Relation:
    """Give hosts without any input row their empty-group aggregate values."""
    present = set(grouped.column(HOST_ID))
    position = hosts.header.index(HOST_ID)
    columns = [hosts.header.index(c) for c in host_columns]
    defaults = tuple(0 if spec.fn == "COUNT" else None for spec in specs)
    extra = frozenset(
        tuple(row[p] for p in columns) + defaults for row in hosts.body if row[position] not in present
    )
    return Relation(grouped.header, grouped.body | extra)


# Entry points

@dataclass(frozen=True)
class OView:
    """The relation a path denotes, with every post-path expanded."""
    path: ast.Path
    scope: PathStep
    relation: Relation

    @property
    def header(self) -> Header:
        return self.relation.header


@dataclass(frozen=True)
class SelectionPlan:
    class_name: str
    predicate: Optional[Any]
    oids: FrozenSet[int]


def context_env(ctx: QueryContext, class_name: Optional[str]) -> Env:
    """Bindings for evaluating with every object of ``class_name`` as host."""
    if class_name is None:
        return Env()
    return Env(host_class=class_name, host=r_rename(extent(ctx, class_name), {ROW_ID: HOST_ID}))


def resolve_oview(db: Database, path: Union[str, ast.Path], context: Optional[str] = None) -> OView:
    if isinstance(path, str):
        path = parse_path(path)
    ctx = QueryContext(db)
    frame, scope, set_path = resolve_rows(ctx, path, context_env(ctx, context))
    relation = expand(ctx, frame, ROWS, scope, full_paths(ctx, scope), set_path)
    return OView(path, scope, relation)


def compile_selection(db: Database, class_name: str, predicate=None, ctx: Optional[QueryContext] = None) -> SelectionPlan:
    if isinstance(predicate, str):
        predicate = parse_expression(predicate)
    ctx = ctx or QueryContext(db)
    if not has_class(db, class_name):
        raise UnknownName(f"unknown class {class_name!r}")
    if predicate is None:
        oids = frozenset(extent(ctx, class_name).column(ROW_ID))
    else:
        oids = select_oids(ctx, class_name, predicate)
    return SelectionPlan(class_name, predicate, oids)


def select_objects(ctx: QueryContext, path: ast.Path, env: Env = Env()) -> Tuple[str, FrozenSet[int]]:
    """Class and OIDs of the objects a path ends in."""
    frame, scope, _ = resolve_rows(ctx, path, env)
    if scope.scope != "class":
        raise KindMismatch(f"{format_path(path)} denotes set rows, not objects")
    return scope.class_name, frozenset(frame.column(ROW_ID))


def run_select(db: Database, select: ast.Select, context: Optional[str] = None) -> Relation:
    ctx = QueryContext(db)
    return evaluate_select(ctx, select, context_env(ctx, context))


def eval_per_host(ctx: QueryContext, expr, env: Env) -> Tuple[Dict[int, Any], Optional[Kind]]:
    """Value of ``expr`` for every host object."""
    prepared = prepare(ctx, None, env, [expr])
    fn, kind = compile_expr(expr, prepared.wide.header, prepared.slots)
    position = prepared.wide.header.index(HOST_ID)
    values: Dict[int, Any] = {}
    for row in prepared.wide.body:
        oid, value = row[position], fn(row)
        if oid in values and values[oid] != value:
            raise CardinalityViolation(f"{format_expr(expr)} has several values for object {oid}")
        values[oid] = value
    return values, kind


def eval_constant(ctx: QueryContext, expr, env: Env = Env()) -> Tuple[Any, Optional[Kind]]:
    """Value of an expression that depends on no object."""
    prepared = prepare(ctx, None, env.without_host(), [expr])
    fn, kind = compile_expr(expr, prepared.wide.header, prepared.slots)
    return fn(next(iter(prepared.wide.body))), kind
