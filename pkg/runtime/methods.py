"""Set-wise methods.

A method body is compiled into a flat list of steps. Each IF contributes a
flag step that records, per object, whether its condition held; the steps
of a branch are guarded by the flags of every enclosing IF. A RETURN marks
the objects that reach it as done, and done objects skip the rest. The
procedure then runs once for a whole set of objects: every step is one
bulk evaluation and at most one bulk update of the root relation.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from errors import (
    ArgumentMismatch,
    KindMismatch,
    NonCompilableBody,
    UnknownComponent,
    UnknownMember,
    UnrealizedComponent,
)
from catalog.model import MemberKind, MemberSpec, RealizationKind
from catalog.registry import active_realization, extent_classes, find_member, has_class, is_subclass, kind_of, resolve_interface
from kernel.database import Database, Update, apply_mutations, check_constraints
from kernel.predicates import In
from kernel.relation import Attribute, Header, Relation
from kernel.values import Kind, ref
from language import ast
from language.printer import format_path
from query.context import Env, QueryContext, local_column
from query.expressions import fit, truthy, walk
from query.oview import HOST_ID, eval_per_host
from runtime.lifecycle import group_by_class
from schema.storage import OID, root_name

logger = logging.getLogger(__name__)

Guard = Tuple[Tuple[str, bool], ...]


class StepKind(Enum):
    FLAG = "flag"
    LOCAL = "local"
    ASSIGN = "assign"
    RETURN = "return"


@dataclass(frozen=True)
class Step:
    """One bulk step; ``target`` is a flag, local or component name."""
    kind: StepKind
    target: Optional[str]
    value: Any
    guard: Guard = ()


@dataclass(frozen=True)
class SetProcedure:
    class_name: str
    method: str
    params: Tuple[Tuple[str, Kind], ...]
    locals: Tuple[Tuple[str, Kind], ...]
    steps: Tuple[Step, ...]

    @property
    def assignments(self) -> Tuple[Step, ...]:
        return tuple(s for s in self.steps if s.kind is StepKind.ASSIGN)


def method_spec(db: Database, class_name: str, method: str) -> MemberSpec:
    try:
        spec = find_member(db, class_name, method)
    except UnknownMember:
        raise UnknownComponent(f"class {class_name} has no method {method!r}") from None
    if spec.kind is not MemberKind.METHOD:
        raise KindMismatch(f"{class_name}.{method} is a component, not a method")
    return spec


class _Compiler:
    def __init__(self, db: Database, class_name: str, params: Sequence[Tuple[str, Kind]]):
        self.db = db
        self.class_name = class_name
        self.params = dict(params)
        self.locals: Dict[str, Kind] = {}
        self.steps: List[Step] = []
        self.flags = 0

    def statement(self, node, guard: Guard) -> None:
        if isinstance(node, ast.Block):
            for inner in node.statements:
                self.statement(inner, guard)
        elif isinstance(node, ast.Declare):
            self.declare(node)
        elif isinstance(node, ast.Assign):
            self.assign(node, guard)
        elif isinstance(node, ast.If):
            self.check_reads(node.condition)
            flag = f"$f{self.flags}"
            self.flags += 1
            self.steps.append(Step(StepKind.FLAG, flag, node.condition, guard))
            self.statement(node.then, guard + ((flag, True),))
            if node.otherwise is not None:
                self.statement(node.otherwise, guard + ((flag, False),))
        elif isinstance(node, ast.Return):
            self.check_reads(node.value)
            self.steps.append(Step(StepKind.RETURN, None, node.value, guard))
        else:
            raise NonCompilableBody(f"unsupported statement {type(node).__name__}")

    def declare(self, node: ast.Declare) -> None:
        name = node.name
        if name in self.params or any(m.name == name for m in resolve_interface(self.db, self.class_name)):
            raise NonCompilableBody(f"local {name} shadows a parameter or member of {self.class_name}")
        self.locals[name] = kind_of(node.type)

    def assign(self, node: ast.Assign, guard: Guard) -> None:
        target = node.target
        if target.anchor == "alias" or len(target.segments) != 1 or target.segments[0].predicate is not None:
            raise NonCompilableBody(f"{format_path(target)}: a method assigns only its own components and locals")
        name = target.segments[0].name
        self.check_reads(node.value)
        if target.anchor == "bare" and name in self.locals:
            self.steps.append(Step(StepKind.LOCAL, name, node.value, guard))
            return
        if target.anchor == "bare" and name in self.params:
            raise NonCompilableBody(f"parameter {name} cannot be assigned")
        spec = self.own_component(name)
        if not spec.is_attribute:
            raise NonCompilableBody(f"{self.class_name}.{name} is a set and cannot be assigned")
        realization = active_realization(self.db, self.class_name, name)
        if realization is None or realization.kind is not RealizationKind.STORED:
            raise NonCompilableBody(f"{self.class_name}.{name} is not stored and cannot be assigned")
        self.steps.append(Step(StepKind.ASSIGN, name, node.value, guard))

    def own_component(self, name: str) -> MemberSpec:
        for m in resolve_interface(self.db, self.class_name):
            if m.name == name and m.is_component:
                return m
        raise UnknownComponent(f"class {self.class_name} has no component {name!r}")

    # reads

    def check_reads(self, expr) -> None:
        for node in walk(expr):
            if isinstance(node, ast.Aggregate):
                raise NonCompilableBody("aggregates in a method body belong inside a SELECT")
            if isinstance(node, ast.NewExpr):
                raise NonCompilableBody("NEW cannot be used inside a method body")
            if isinstance(node, ast.Path):
                self.check_path(node)

    def related(self, other: str) -> bool:
        return is_subclass(self.db, other, self.class_name) or is_subclass(self.db, self.class_name, other)

    def check_path(self, path: ast.Path) -> None:
        if path.anchor == "alias":
            return
        segments = path.segments
        first = segments[0].name
        if path.anchor == "bare" and (first in self.params or first in self.locals):
            if len(segments) > 1:
                raise NonCompilableBody(f"{format_path(path)}: {first} is a variable and has no components")
            return
        if path.anchor == "dot" or any(m.name == first for m in resolve_interface(self.db, self.class_name)):
            self.check_own(path, segments)
            return
        if has_class(self.db, first):
            if self.related(first):
                raise NonCompilableBody(f"{format_path(path)} reads objects of the method's own class hierarchy")
            self.check_other(path, first, segments[1:], selection=segments[0].predicate)

    def check_own(self, path: ast.Path, segments) -> None:
        head = segments[0]
        if head.predicate is not None:
            raise NonCompilableBody(f"{format_path(path)}: selections are not allowed on own components")
        if head.name == "#":
            return
        spec = self.own_component(head.name)
        if spec.kind is MemberKind.SET:
            raise NonCompilableBody(f"{format_path(path)} traverses a set; use a SELECT")
        realization = active_realization(self.db, self.class_name, head.name)
        if realization is None or realization.kind is not RealizationKind.STORED:
            raise NonCompilableBody(f"{format_path(path)} reads the calculated component {head.name}")
        if len(segments) > 1:
            if self.related(spec.target):
                raise NonCompilableBody(f"{format_path(path)} follows a reference into the method's own class hierarchy")
            self.check_other(path, spec.target, segments[1:])

    def check_other(self, path: ast.Path, class_name: str, segments, selection=None) -> None:
        """Reads through objects of another class: stored scalars and references only."""
        if selection is not None:
            self.check_selection(selection)
        for segment in segments:
            if segment.predicate is not None:
                raise NonCompilableBody(f"{format_path(path)}: selections are only allowed on a class name")
            if segment.name == "#":
                return
            spec = find_member(self.db, class_name, segment.name)
            if spec.kind is MemberKind.SET or spec.kind is MemberKind.METHOD:
                raise NonCompilableBody(f"{format_path(path)} traverses {segment.name}; use a SELECT")
            for exact in extent_classes(self.db, class_name):
                realization = active_realization(self.db, exact, segment.name)
                if realization is not None and realization.kind is not RealizationKind.STORED:
                    raise NonCompilableBody(f"{format_path(path)} reads the calculated component {segment.name}")
            if spec.kind is MemberKind.SCALAR:
                return
            class_name = spec.target
            if self.related(class_name):
                raise NonCompilableBody(f"{format_path(path)} follows a reference into the method's own class hierarchy")

    def check_selection(self, predicate) -> None:
        for node in walk(predicate):
            if isinstance(node, (ast.Aggregate, ast.NewExpr)):
                raise NonCompilableBody("a selection inside a method body must be a plain condition")


def compile_method(db: Database, class_name: str, method: str) -> SetProcedure:
    """Compile the active realization of ``method`` for objects of exact class ``class_name``."""
    spec = method_spec(db, class_name, method)
    realization = active_realization(db, class_name, method)
    if realization is None:
        raise UnrealizedComponent(f"{class_name}.{method} has no realization")
    if realization.kind is not RealizationKind.PROCEDURE:
        raise NonCompilableBody(f"{class_name}.{method} is not realized by a procedure")
    compiler = _Compiler(db, class_name, spec.params)
    compiler.statement(realization.body, ())
    procedure = SetProcedure(
        class_name,
        method,
        tuple(spec.params),
        tuple(compiler.locals.items()),
        tuple(compiler.steps),
    )
    logger.debug(f"compiled {class_name}.{method} into {len(procedure.steps)} steps")
    return procedure


# Execution

def _admitted(state: Mapping[str, Any], guard: Guard) -> bool:
    return all(truthy(state.get(flag)) is expected for flag, expected in guard)


def _host(procedure: SetProcedure, frames: Dict[int, Dict[str, Any]], oids: Sequence[int]) -> Relation:
    attrs = [Attribute(HOST_ID, ref(procedure.class_name))]
    attrs += [Attribute(local_column(name), kind) for name, kind in procedure.locals]
    body = frozenset(
        (oid,) + tuple(frames[oid].get(name) for name, _ in procedure.locals)
        for oid in oids
    )
    return Relation(Header(tuple(attrs)), body)


def run_procedure(
    db: Database,
    start: QueryContext,
    procedure: SetProcedure,
    oids: Iterable[int],
    params: Dict[str, Tuple[Any, Kind]],
) -> Database:
    """Execute a compiled method once over objects of its exact class.

    Sub-selects read from ``start``; everything else reads the current state.
    """
    oids = sorted(oids)
    frames: Dict[int, Dict[str, Any]] = {oid: {} for oid in oids}
    done: Set[int] = set()
    local_kinds = dict(procedure.locals)
    root = root_name(procedure.class_name)
    for step in procedure.steps:
        active = [oid for oid in oids if oid not in done and _admitted(frames[oid], step.guard)]
        if not active:
            continue
        if step.kind is StepKind.RETURN:
            done.update(active)
            continue
        env = Env(
            host_class=procedure.class_name,
            host=_host(procedure, frames, active),
            constants=params,
            host_locals=local_kinds,
        )
        values, _ = eval_per_host(QueryContext(db, snapshot=start), step.value, env)
        if step.kind is StepKind.FLAG:
            for oid in active:
                frames[oid][step.target] = truthy(values.get(oid))
        elif step.kind is StepKind.LOCAL:
            kind = local_kinds[step.target]
            for oid in active:
                frames[oid][step.target] = fit(kind, values.get(oid), step.target)
        else:
            kind = find_member(db, procedure.class_name, step.target).value_kind
            where = f"{procedure.class_name}.{step.target}"
            fitted = {oid: fit(kind, values.get(oid), where) for oid in active}
            change = {step.target: lambda row, fitted=fitted: fitted[row[OID]]}
            db = apply_mutations(db, [Update(root, change, In(OID, frozenset(active)))], check=False)
    return db


def bind_arguments(spec: MemberSpec, args: Sequence[Any], where: str) -> Dict[str, Tuple[Any, Kind]]:
    """Parameters passed by value, coerced to their declared kinds."""
    if len(args) != len(spec.params):
        raise ArgumentMismatch(f"{where} takes {len(spec.params)} arguments, {len(args)} given")
    bound = {}
    for (name, kind), value in zip(spec.params, args):
        try:
            bound[name] = (fit(kind, value, f"{where} parameter {name}"), kind)
        except KindMismatch as exc:
            raise ArgumentMismatch(exc.message) from None
    return bound


def exec_method(
    db: Database,
    class_name: str,
    oids: Iterable[int],
    method: str,
    args: Sequence[Any] = (),
    check: bool = True,
) -> Database:
    """Run ``method`` once over a set of objects.

    Objects are grouped by exact class and each group runs the realization
    active for its class.
    """
    spec = method_spec(db, class_name, method)
    params = bind_arguments(spec, args, f"{class_name}.{method}")
    start = QueryContext(db)
    groups = group_by_class(db, class_name, oids)
    procedures = {exact: compile_method(db, exact, method) for exact in groups}
    for exact, group in groups.items():
        db = run_procedure(db, start, procedures[exact], group, params)
    if check:
        check_constraints(db)
    logger.debug(f"executed {class_name}.{method} over {sum(len(g) for g in groups.values())} objects")
    return db
