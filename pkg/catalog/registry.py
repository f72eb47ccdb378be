"""Class definition, interface resolution, realizations and path lookup."""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from errors import (
    AlreadyStored,
    AmbiguousMember,
    CyclicInheritance,
    DuplicateClass,
    InheritanceConflict,
    KindMismatch,
    MemberCollision,
    NotTraversable,
    UnknownClass,
    UnknownMember,
    UnknownName,
    UnknownParent,
)
from catalog.model import (
    Catalog,
    ClassSpec,
    MemberKind,
    MemberSpec,
    Realization,
    RealizationKind,
    ReferenceSpec,
)
from kernel.database import Database
from kernel.values import SCALAR_KINDS, Kind, ref
from language import ast
from language.printer import format_statement

logger = logging.getLogger(__name__)


def new_database() -> Database:
    """An empty database with an empty catalog."""
    return Database(catalog=Catalog())


def catalog_of(db: Database) -> Catalog:
    return db.catalog if db.catalog is not None else Catalog()


def with_catalog(db: Database, catalog: Catalog) -> Database:
    return replace(db, catalog=catalog)


def record_ddl(db: Database, statement: ast.Statement) -> Database:
    """Append a statement to the DDL log persisted in snapshots."""
    catalog = catalog_of(db)
    return with_catalog(db, replace(catalog, ddl=catalog.ddl + (format_statement(statement),)))


# Class specifications

def kind_of(type_ref: ast.TypeRef) -> Kind:
    if type_ref.is_scalar:
        return SCALAR_KINDS[type_ref.name]
    return ref(type_ref.name)


def _member_from_ast(node: ast.Member, origin: str) -> MemberSpec:
    if isinstance(node, ast.AttrDecl):
        if node.type.is_scalar:
            return MemberSpec(node.name, MemberKind.SCALAR, scalar=SCALAR_KINDS[node.type.name], origin=origin)
        return MemberSpec(node.name, MemberKind.REFERENCE, target=node.type.name, origin=origin)
    if isinstance(node, ast.SetMember):
        members = tuple(_member_from_ast(m, origin) for m in node.members)
        _check_unique_names(members, f"{origin}.{node.name}")
        by_name = {m.name: m for m in members}
        for name in node.key:
            if name not in by_name or not by_name[name].is_attribute:
                raise UnknownMember(f"key attribute {name!r} is not a scalar of {origin}.{node.name}")
        return MemberSpec(node.name, MemberKind.SET, members=members, key=tuple(node.key), origin=origin)
    params = tuple((p.name, kind_of(p.type)) for p in node.params)
    if len({p[0] for p in params}) != len(params):
        raise MemberCollision(f"duplicate parameter name in {origin}.{node.name}")
    returns = kind_of(node.returns) if node.returns is not None else None
    return MemberSpec(node.name, MemberKind.METHOD, params=params, returns=returns, origin=origin)


def _check_unique_names(members: Iterable[MemberSpec], where: str) -> None:
    seen = set()
    for m in members:
        if m.name in seen:
            raise MemberCollision(f"member {m.name!r} declared twice in {where}")
        seen.add(m.name)


def class_spec_from_ast(node: ast.CreateClass) -> ClassSpec:
    members = tuple(_member_from_ast(m, node.name) for m in node.members)
    _check_unique_names(members, node.name)
    references = tuple(
        ReferenceSpec(r.component, r.attrs, r.target, r.target_attrs) for r in node.references
    )
    return ClassSpec(node.name, tuple(node.parents), members, tuple(node.key), references)


def get_class(db: Database, name: str) -> ClassSpec:
    try:
        return catalog_of(db).classes[name]
    except KeyError:
        raise UnknownClass(f"class {name!r} is not defined") from None


def has_class(db: Database, name: str) -> bool:
    return name in catalog_of(db).classes


def class_names(db: Database) -> List[str]:
    """Classes in definition order."""
    return list(catalog_of(db).classes)


def define_class(db: Database, spec: ClassSpec) -> Database:
    """Add a class; no storage is allocated until a realization is registered."""
    catalog = catalog_of(db)
    if spec.name in catalog.classes:
        raise DuplicateClass(f"class {spec.name!r} already exists")
    if spec.name in spec.parents:
        raise CyclicInheritance(f"class {spec.name!r} cannot extend itself")
    if len(set(spec.parents)) != len(spec.parents):
        raise UnknownParent(f"class {spec.name!r} names a parent twice")
    for parent in spec.parents:
        if parent not in catalog.classes:
            raise UnknownParent(f"parent class {parent!r} of {spec.name!r} is not defined")
    classes = dict(catalog.classes)
    classes[spec.name] = spec
    candidate = with_catalog(db, replace(catalog, classes=classes))
    linearize(candidate, spec.name)
    interface = resolve_interface(candidate, spec.name)
    by_name = {m.name: m for m in interface}
    for name in spec.class_key:
        member = by_name.get(name)
        if member is None or not member.is_attribute:
            raise UnknownMember(f"class key {name!r} is not a scalar or reference of {spec.name}")
    for reference in spec.references:
        _check_reference(by_name, spec.name, reference)
    logger.debug(f"defined class {spec.name} with {len(interface)} members")
    # new descendants widen the extents that references and class keys range over
    from schema.storage import sync_storage
    return sync_storage(candidate)


def _check_reference(by_name: Dict[str, MemberSpec], class_name: str, reference: ReferenceSpec) -> None:
    scope: Optional[MemberSpec] = None
    members = by_name
    for step in reference.component:
        member = members.get(step)
        if member is None:
            raise UnknownMember(f"REFERENCE component {'.'.join(reference.component)} not in {class_name}")
        scope = member
        members = {m.name: m for m in member.members}
    if scope is None or scope.kind is not MemberKind.SET:
        raise UnknownMember(f"REFERENCE component {'.'.join(reference.component)} is not a set of {class_name}")
    for attr in reference.attrs:
        inner = scope.member(attr)
        if inner is None or not inner.is_attribute:
            raise UnknownMember(f"REFERENCE attribute {attr!r} not in {'.'.join(reference.component)}")
    if len(reference.attrs) != len(reference.target_attrs):
        raise KindMismatch("REFERENCE attribute lists differ in length")


# Inheritance

def _cached(db: Database, key: Tuple, compute):
    cache = catalog_of(db).cache
    if key not in cache:
        cache[key] = compute()
    return cache[key]


def linearize(db: Database, name: str) -> List[str]:
    """C3 linearization: the class first, then ancestors in resolution order."""
    return list(_cached(db, ("mro", name), lambda: tuple(_linearize(db, name, ()))))


def _linearize(db: Database, name: str, visiting: Tuple[str, ...]) -> List[str]:
    if name in visiting:
        raise CyclicInheritance(f"inheritance cycle through {name!r}")
    spec = get_class(db, name)
    sequences = [_linearize(db, p, visiting + (name,)) for p in spec.parents]
    sequences.append(list(spec.parents))
    result = [name]
    sequences = [list(s) for s in sequences if s]
    while sequences:
        for sequence in sequences:
            head = sequence[0]
            if not any(head in other[1:] for other in sequences):
                break
        else:
            raise InheritanceConflict(f"no consistent method resolution order for {name!r}")
        result.append(head)
        sequences = [[c for c in s if c != head] for s in sequences]
        sequences = [s for s in sequences if s]
    return result


def descendants(db: Database, name: str) -> List[str]:
    """Strict descendants in definition order."""
    return list(_cached(db, ("descendants", name), lambda: tuple(
        candidate for candidate in class_names(db)
        if candidate != name and name in linearize(db, candidate)
    )))


def extent_classes(db: Database, name: str) -> List[str]:
    """The class itself plus its descendants: the exact classes of its extent."""
    get_class(db, name)
    return [name] + descendants(db, name)


def is_subclass(db: Database, name: str, ancestor: str) -> bool:
    return ancestor in linearize(db, name)


def resolve_interface(db: Database, name: str) -> List[MemberSpec]:
    """Flattened interface: parents' members in EXTEND order, then own members."""
    return list(_cached(db, ("interface", name), lambda: tuple(_resolve_interface(db, name))))


def _resolve_interface(db: Database, name: str) -> List[MemberSpec]:
    spec = get_class(db, name)
    inherited: List[MemberSpec] = []
    by_name: Dict[str, MemberSpec] = {}
    for parent in spec.parents:
        for member in resolve_interface(db, parent):
            existing = by_name.get(member.name)
            if existing is None:
                by_name[member.name] = member
                inherited.append(member)
            elif existing.origin != member.origin:
                raise AmbiguousMember(
                    f"{name!r} inherits {member.name!r} from both {existing.origin} and {member.origin}"
                )
    for member in spec.members:
        if member.name in by_name:
            raise MemberCollision(f"{name}.{member.name} collides with a member inherited from {by_name[member.name].origin}")
    return inherited + list(spec.members)


def find_member(db: Database, class_name: str, member: str) -> MemberSpec:
    for m in resolve_interface(db, class_name):
        if m.name == member:
            return m
    raise UnknownMember(f"class {class_name} has no member {member!r}")


# Realizations

def active_realization(db: Database, class_name: str, member: str) -> Optional[Realization]:
    """The realization in effect for ``member`` of objects of exact class ``class_name``."""
    realizations = catalog_of(db).realizations
    for owner in linearize(db, class_name):
        found = realizations.get((owner, member))
        if found is not None:
            return found
    return None


def is_stored(db: Database, class_name: str, member: str) -> bool:
    found = active_realization(db, class_name, member)
    return found is not None and found.kind is RealizationKind.STORED


def realization_from_ast(db: Database, node: ast.AlterRealize) -> List[Tuple[str, Realization]]:
    """Translate an ALTER ... REALIZE statement into (member, realization) pairs."""
    body = node.body
    params = tuple((p.name, kind_of(p.type)) for p in node.params or ())
    if isinstance(body, ast.StoredBody):
        realization = Realization(RealizationKind.STORED, owner=node.class_name)
    elif isinstance(body, ast.QueryBody):
        realization = Realization(RealizationKind.QUERY, body.select, params, node.class_name)
    else:
        realization = Realization(RealizationKind.PROCEDURE, body.block, params, node.class_name)
    return [(target, realization) for target in node.targets]


def register_realization(db: Database, class_name: str, member: str, realization: Realization) -> Database:
    """Install ``realization`` for ``class_name.member`` and re-derive storage.

    The registration shadows ancestors' realizations for the class and every
    descendant that does not realize the member itself.
    """
    from schema.storage import ensure_no_data_loss, sync_storage

    spec = find_member(db, class_name, member)
    _check_body_fits(spec, realization, class_name)
    catalog = catalog_of(db)
    previous = catalog.realizations.get((class_name, member))
    if previous is not None and previous.kind is RealizationKind.STORED and realization.kind is RealizationKind.STORED:
        raise AlreadyStored(f"{class_name}.{member} is already stored")
    if spec.kind is MemberKind.REFERENCE or _contains_references(spec):
        for target in _reference_targets(spec):
            if not has_class(db, target):
                raise UnknownClass(f"{class_name}.{member} references undefined class {target!r}")
    realizations = dict(catalog.realizations)
    realizations[(class_name, member)] = replace(realization, owner=class_name)
    candidate = with_catalog(db, replace(catalog, realizations=realizations))
    ensure_no_data_loss(db, candidate, class_name, member)
    logger.debug(f"realized {class_name}.{member} as {realization.kind.value}")
    return sync_storage(candidate)


def _contains_references(spec: MemberSpec) -> bool:
    return any(m.kind is MemberKind.REFERENCE or _contains_references(m) for m in spec.members)


def _reference_targets(spec: MemberSpec) -> List[str]:
    if spec.kind is MemberKind.REFERENCE:
        return [spec.target]
    targets: List[str] = []
    for m in spec.members:
        targets.extend(_reference_targets(m))
    return targets


def _check_body_fits(spec: MemberSpec, realization: Realization, class_name: str) -> None:
    where = f"{class_name}.{spec.name}"
    if spec.kind is MemberKind.METHOD:
        if realization.kind is not RealizationKind.PROCEDURE:
            raise KindMismatch(f"method {where} must be realized by a procedure")
        if tuple(realization.params) != tuple(spec.params):
            raise KindMismatch(f"realization parameters of {where} do not match its declaration")
        return
    if realization.params:
        raise KindMismatch(f"component {where} takes no parameters")
    if spec.kind is MemberKind.SET:
        if realization.kind is RealizationKind.PROCEDURE:
            raise KindMismatch(f"set component {where} cannot be realized by a procedure")
        if realization.kind is RealizationKind.QUERY and any(m.kind is MemberKind.SET for m in spec.members):
            raise KindMismatch(f"calculated set {where} cannot declare nested sets")


# Path lookup

@dataclass(frozen=True)
class PathStep:
    """One resolved segment.

    ``scope`` is ``class`` when the step lands on objects of ``class_name``,
    ``set`` when it lands on rows of a set component, ``scalar`` otherwise.
    """
    name: str
    scope: str
    class_name: Optional[str]
    member: Optional[MemberSpec]
    kind: Optional[Kind] = None


@dataclass(frozen=True)
class PathDescriptor:
    steps: Tuple[PathStep, ...]

    @property
    def terminal(self) -> PathStep:
        return self.steps[-1]

    @property
    def is_scalar(self) -> bool:
        return self.terminal.scope == "scalar"


def step_into(db: Database, scope: PathStep, name: str) -> PathStep:
    """Resolve ``name`` one level below ``scope``."""
    if scope.scope == "scalar":
        raise NotTraversable(f"{scope.name} is a scalar and has no component {name!r}")
    if name == "#":
        # on a set row this is the owning object's OID
        return PathStep("#", "scalar", None, None, ref(scope.class_name))
    if scope.scope == "class":
        member = find_member(db, scope.class_name, name)
    else:
        member = scope.member.member(name)
        if member is None:
            raise UnknownMember(f"set {scope.name} has no attribute {name!r}")
    return _step_for(member, scope)


def _step_for(member: MemberSpec, parent: Optional[PathStep]) -> PathStep:
    if member.kind is MemberKind.SCALAR:
        return PathStep(member.name, "scalar", None, member, member.scalar)
    if member.kind is MemberKind.REFERENCE:
        return PathStep(member.name, "class", member.target, member, ref(member.target))
    if member.kind is MemberKind.SET:
        return PathStep(member.name, "set", parent.class_name if parent else None, member)
    raise NotTraversable(f"{member.name} is a method")


def lookup_path(db: Database, names: Sequence[str], context: Optional[str] = None) -> PathDescriptor:
    """Resolve a dotted name sequence.

    The first name is tried as a member of ``context`` first, then as a class.
    """
    if not names:
        raise UnknownName("empty path")
    first = names[0]
    steps: List[PathStep] = []
    if context is not None and any(m.name == first for m in resolve_interface(db, context)):
        start = PathStep(context, "class", context, None)
        steps.append(step_into(db, start, first))
    elif has_class(db, first):
        steps.append(PathStep(first, "class", first, None))
    else:
        raise UnknownName(f"{first!r} is neither a class nor a component in this context")
    for name in names[1:]:
        steps.append(step_into(db, steps[-1], name))
    return PathDescriptor(tuple(steps))


def describe_class(db: Database, name: str) -> List[Tuple[str, str, str]]:
    """(member, declaration, realization) triples for the shell."""
    rows = []
    for member in resolve_interface(db, name):
        realization = active_realization(db, name, member.name)
        how = realization.kind.value if realization else "unrealized"
        if realization and realization.owner != name:
            how += f" (from {realization.owner})"
        rows.append((member.name, member.describe(), how))
    return rows
