"""Catalog data model: class specifications, realizations and name tables."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

from kernel.values import Kind, ref


class MemberKind(Enum):
    """Kinds of class members."""
    SCALAR = "scalar"
    REFERENCE = "reference"
    SET = "set"
    METHOD = "method"


@dataclass(frozen=True)
class MemberSpec:
    """One member of a class interface.

    ``origin`` names the class that declared the member, so a member
    inherited along two paths from the same declaration is recognised as one.
    """
    name: str
    kind: MemberKind
    scalar: Optional[Kind] = None
    target: Optional[str] = None
    members: Tuple["MemberSpec", ...] = ()
    key: Tuple[str, ...] = ()
    params: Tuple[Tuple[str, Kind], ...] = ()
    returns: Optional[Kind] = None
    origin: str = ""

    @property
    def is_component(self) -> bool:
        return self.kind is not MemberKind.METHOD

    @property
    def is_attribute(self) -> bool:
        """Scalar or reference: stored as a single attribute."""
        return self.kind in (MemberKind.SCALAR, MemberKind.REFERENCE)

    @property
    def value_kind(self) -> Kind:
        if self.kind is MemberKind.REFERENCE:
            return ref(self.target)
        return self.scalar

    def member(self, name: str) -> Optional["MemberSpec"]:
        for m in self.members:
            if m.name == name:
                return m
        return None

    def describe(self) -> str:
        if self.kind is MemberKind.SET:
            inner = ", ".join(m.describe() for m in self.members)
            key = f" KEY({', '.join(self.key)})" if self.key else ""
            return f"{self.name} SET OF ({inner}){key}"
        if self.kind is MemberKind.METHOD:
            params = ", ".join(f"{n} {k}" for n, k in self.params)
            returns = f" RETURNS {self.returns}" if self.returns else ""
            return f"{self.name}({params}){returns}"
        if self.kind is MemberKind.REFERENCE:
            return f"{self.name} {self.target}"
        return f"{self.name} {self.scalar}"


@dataclass(frozen=True)
class ReferenceSpec:
    """Cross-class constraint: ``component(attrs)`` values exist in ``target(target_attrs)``."""
    component: Tuple[str, ...]
    attrs: Tuple[str, ...]
    target: str
    target_attrs: Tuple[str, ...]


@dataclass(frozen=True)
class ClassSpec:
    name: str
    parents: Tuple[str, ...] = ()
    members: Tuple[MemberSpec, ...] = ()
    class_key: Tuple[str, ...] = ()
    references: Tuple[ReferenceSpec, ...] = ()


class RealizationKind(Enum):
    STORED = "stored"
    QUERY = "query"
    PROCEDURE = "procedure"


@dataclass(frozen=True)
class Realization:
    """Implementation of a member; ``body`` is a Select or Block node."""
    kind: RealizationKind
    body: Any = None
    params: Tuple[Tuple[str, Kind], ...] = ()
    owner: str = ""


@dataclass(frozen=True)
class NameEntry:
    """Binding of a stored member of an exact class to its relational structure."""
    class_name: str
    member_path: Tuple[str, ...]
    relation: str
    attributes: Tuple[str, ...]


@dataclass(frozen=True)
class Catalog:
    classes: Mapping[str, ClassSpec] = field(default_factory=dict)
    realizations: Mapping[Tuple[str, str], Realization] = field(default_factory=dict)
    name_table: Tuple[NameEntry, ...] = ()
    ddl: Tuple[str, ...] = ()
    # derived values (linearizations, interfaces); a changed catalog starts empty
    cache: Dict[Any, Any] = field(default_factory=dict, init=False, compare=False, repr=False)

    def entries_for(self, class_name: str) -> Tuple[NameEntry, ...]:
        return tuple(e for e in self.name_table if e.class_name == class_name)

    def entry(self, class_name: str, member_path: Tuple[str, ...]) -> Optional[NameEntry]:
        for e in self.name_table:
            if e.class_name == class_name and e.member_path == member_path:
                return e
        return None
