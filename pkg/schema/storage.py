"""Storage derivation: class specifications to stored relations and name tables.

Each exact class owns complete flattened storage:

* ``C@obj`` holds one row per object: ``#oid`` plus every stored scalar or
  reference member, in interface order.
* ``C@m`` holds the rows of a stored set member ``m``: ``#oid`` plus the
  set's attributes; key ``#oid`` + the component key.
* ``C@m@n`` holds a set ``n`` nested in ``m``; it carries the parent row's
  identity as ``m.<key>`` columns.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from errors import MissingComponentKey, NotStored, StoredDataLoss
from catalog.model import MemberKind, MemberSpec, NameEntry, RealizationKind
from catalog.registry import (
    active_realization,
    catalog_of,
    class_names,
    extent_classes,
    find_member,
    linearize,
    resolve_interface,
    with_catalog,
)
from kernel.database import Database, ForeignKey, StoredRelation, UniqueConstraint
from kernel.relation import Attribute, Header, Relation
from kernel.values import Kind, ref

logger = logging.getLogger(__name__)

OID = "#oid"


def root_name(class_name: str) -> str:
    return f"{class_name}@obj"


def set_relation_name(class_name: str, path: Sequence[str]) -> str:
    return "@".join((class_name,) + tuple(path))


@dataclass(frozen=True)
class SetLayout:
    """Column layout of the relation storing a (possibly nested) set member.

    ``parent_columns`` identify the enclosing set row; ``attributes`` are the
    set's own scalar and reference members.
    """
    class_name: str
    path: Tuple[str, ...]
    member: MemberSpec
    parent_columns: Tuple[Tuple[str, Kind], ...]

    @property
    def relation(self) -> str:
        return set_relation_name(self.class_name, self.path)

    @property
    def attributes(self) -> Tuple[MemberSpec, ...]:
        return tuple(m for m in self.member.members if m.is_attribute)

    @property
    def nested(self) -> Tuple[MemberSpec, ...]:
        return tuple(m for m in self.member.members if m.kind is MemberKind.SET)

    @property
    def header(self) -> Header:
        attrs = [Attribute(OID, ref(self.class_name))]
        attrs += [Attribute(name, kind) for name, kind in self.parent_columns]
        attrs += [Attribute(m.name, m.value_kind) for m in self.attributes]
        return Header(tuple(attrs))

    @property
    def key(self) -> Optional[Tuple[str, ...]]:
        if not self.member.key:
            return None
        return (OID,) + tuple(name for name, _ in self.parent_columns) + tuple(self.member.key)

    @property
    def identity(self) -> Tuple[str, ...]:
        """Columns a nested set uses to point at a row of this one."""
        return (OID,) + tuple(name for name, _ in self.parent_columns) + tuple(self.member.key)

    def child(self, member: MemberSpec) -> "SetLayout":
        if not self.member.key:
            raise MissingComponentKey(
                f"{self.class_name}.{'.'.join(self.path)} needs a KEY to hold the nested set {member.name}"
            )
        prefix = ".".join(self.path)
        own = tuple((f"{prefix}.{k}", self.member.member(k).value_kind) for k in self.member.key)
        return SetLayout(self.class_name, self.path + (member.name,), member, self.parent_columns + own)


def top_layout(class_name: str, member: MemberSpec) -> SetLayout:
    return SetLayout(class_name, (member.name,), member, ())


def layout_for(db: Database, class_name: str, path: Sequence[str]) -> SetLayout:
    """Layout of the set member at ``path`` (set names from the class down)."""
    layout = top_layout(class_name, find_member(db, class_name, path[0]))
    for name in path[1:]:
        member = layout.member.member(name)
        if member is None or member.kind is not MemberKind.SET:
            raise NotStored(f"{class_name}.{'.'.join(path)} is not a nested set")
        layout = layout.child(member)
    return layout


def _set_layouts(layout: SetLayout) -> List[SetLayout]:
    result = [layout]
    for member in layout.nested:
        result.extend(_set_layouts(layout.child(member)))
    return result


def has_storage(db: Database, class_name: str) -> bool:
    """Whether objects of the exact class can exist (some member realized)."""
    return any(
        active_realization(db, class_name, m.name) is not None
        for m in resolve_interface(db, class_name)
    ) or not any(m.is_component for m in resolve_interface(db, class_name))


def stored_members(db: Database, class_name: str) -> List[MemberSpec]:
    return [
        m for m in resolve_interface(db, class_name)
        if m.is_component and _stored(db, class_name, m.name)
    ]


def _stored(db: Database, class_name: str, member: str) -> bool:
    realization = active_realization(db, class_name, member)
    return realization is not None and realization.kind is RealizationKind.STORED


def derive_storage(db: Database, class_name: str) -> Tuple[List[StoredRelation], List[NameEntry]]:
    """Empty stored relation schemas and name-table entries for one exact class."""
    relations: List[StoredRelation] = []
    entries: List[NameEntry] = []
    if not has_storage(db, class_name):
        return relations, entries
    members = stored_members(db, class_name)
    root = root_name(class_name)
    attrs = [Attribute(OID, ref(class_name))]
    for member in members:
        if member.is_attribute:
            attrs.append(Attribute(member.name, member.value_kind))
            entries.append(NameEntry(class_name, (member.name,), root, (member.name,)))
    relations.append(StoredRelation(root, Relation.empty(Header(tuple(attrs)), (OID,))))
    for member in members:
        if member.kind is not MemberKind.SET:
            continue
        for layout in _set_layouts(top_layout(class_name, member)):
            header = layout.header
            relations.append(StoredRelation(layout.relation, Relation.empty(header, layout.key)))
            entries.append(NameEntry(class_name, layout.path, layout.relation, header.names))
    return relations, entries


def storage_for(db: Database, class_name: str, member_path: Sequence[str]) -> NameEntry:
    """Name-table entry of a stored member of the exact class."""
    if isinstance(member_path, str):
        member_path = (member_path,)
    member_path = tuple(member_path)
    find_member(db, class_name, member_path[0])
    if not _stored(db, class_name, member_path[0]):
        raise NotStored(f"{class_name}.{'.'.join(member_path)} is not stored")
    entry = catalog_of(db).entry(class_name, member_path)
    if entry is None:
        raise NotStored(f"{class_name}.{'.'.join(member_path)} has no storage")
    return entry


def _migrate(old: Optional[StoredRelation], fresh: StoredRelation) -> StoredRelation:
    if old is None:
        return fresh
    header = fresh.header
    sources = []
    for attribute in header:
        if attribute.name in old.header and old.header.kind(attribute.name) == attribute.kind:
            sources.append(old.header.index(attribute.name))
        else:
            sources.append(None)
    body = frozenset(
        tuple(None if s is None else row[s] for s in sources) for row in old.relation.body
    )
    return replace(fresh, relation=Relation(header, body, fresh.relation.key))


def sync_storage(db: Database) -> Database:
    """Re-derive every class's storage, carrying data over, then rebuild constraints."""
    relations: Dict[str, StoredRelation] = {}
    entries: List[NameEntry] = []
    for class_name in class_names(db):
        derived, class_entries = derive_storage(db, class_name)
        for stored in derived:
            relations[stored.name] = _migrate(db.relations.get(stored.name), stored)
        entries.extend(class_entries)
    for name in db.relations:
        if name not in relations:
            logger.debug(f"dropping relation {name}")
    catalog = replace(catalog_of(db), name_table=tuple(entries))
    synced = with_catalog(replace(db, relations=relations), catalog)
    logger.debug(f"storage synced: {len(relations)} relations")
    return rebuild_constraints(synced)


def _holds_data(db: Database, class_name: str, member: MemberSpec) -> bool:
    if member.is_attribute:
        root = db.relations.get(root_name(class_name))
        if root is None or member.name not in root.header:
            return False
        return any(v is not None for v in root.relation.column(member.name))
    relation = db.relations.get(set_relation_name(class_name, (member.name,)))
    return relation is not None and len(relation.relation) > 0


def ensure_no_data_loss(before: Database, after: Database, class_name: str, member: str) -> None:
    """Refuse a re-realization that would drop stored values of ``member``."""
    spec = find_member(before, class_name, member)
    for exact in extent_classes(after, class_name):
        if _stored(before, exact, member) and not _stored(after, exact, member):
            if _holds_data(before, exact, spec):
                raise StoredDataLoss(
                    f"{exact}.{member} holds stored data; destroy the objects before re-realizing it"
                )


def _extent_roots(db: Database, class_name: str, attrs: Sequence[str]) -> Tuple[str, ...]:
    names = []
    for exact in extent_classes(db, class_name):
        stored = db.relations.get(root_name(exact))
        if stored is not None and all(a in stored.header for a in attrs):
            names.append(stored.name)
    return tuple(names)


def _ref_keys(db: Database, header: Header) -> List[ForeignKey]:
    keys = []
    for attribute in header:
        if attribute.name == OID or not attribute.kind.is_ref:
            continue
        keys.append(ForeignKey((attribute.name,), _extent_roots(db, attribute.kind.target, (OID,)), (OID,)))
    return keys


def rebuild_constraints(db: Database) -> Database:
    """Recompute foreign keys and unique constraints from the catalog."""
    relations: Dict[str, StoredRelation] = dict(db.relations)
    for class_name in class_names(db):
        root = root_name(class_name)
        if root not in db.relations:
            continue
        stored = db.relations[root]
        relations[root] = replace(stored, foreign_keys=tuple(_ref_keys(db, stored.header)))
        references = [r for owner in linearize(db, class_name) for r in catalog_of(db).classes[owner].references]
        for member in stored_members(db, class_name):
            if member.kind is not MemberKind.SET:
                continue
            for layout in _set_layouts(top_layout(class_name, member)):
                child = db.relations[layout.relation]
                keys = _ref_keys(db, child.header)
                if len(layout.path) == 1:
                    keys.insert(0, ForeignKey((OID,), (root,), (OID,)))
                else:
                    parent = layout_for(db, class_name, layout.path[:-1])
                    local = (OID,) + tuple(name for name, _ in layout.parent_columns)
                    keys.insert(0, ForeignKey(local, (parent.relation,), parent.identity))
                for reference in references:
                    if reference.component == layout.path:
                        targets = _extent_roots(db, reference.target, reference.target_attrs)
                        keys.append(ForeignKey(tuple(reference.attrs), targets, tuple(reference.target_attrs)))
                relations[layout.relation] = replace(child, foreign_keys=tuple(keys))
    uniques = []
    for class_name in class_names(db):
        spec = catalog_of(db).classes[class_name]
        if spec.class_key:
            roots = _extent_roots(db, class_name, spec.class_key)
            if roots:
                uniques.append(UniqueConstraint(f"{class_name}.KEY", roots, tuple(spec.class_key)))
    return replace(db, relations=relations, uniques=tuple(uniques))
