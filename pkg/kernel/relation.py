"""Headers, relations and canonical row order."""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from errors import HeaderMismatch, KeyViolation, UnknownAttribute
from kernel.values import Kind, coerce, sort_key

Row = Tuple[Any, ...]


@dataclass(frozen=True)
class Attribute:
    """A named, typed column of a header."""
    name: str
    kind: Kind

    def __str__(self) -> str:
        return f"{self.name}:{self.kind}"


@dataclass(frozen=True)
class Header:
    """Ordered, non-empty list of uniquely named attributes."""
    attributes: Tuple[Attribute, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        attributes = tuple(self.attributes)
        if not attributes:
            raise HeaderMismatch("a header needs at least one attribute")
        index: Dict[str, int] = {}
        for position, attribute in enumerate(attributes):
            if attribute.name in index:
                raise HeaderMismatch(f"duplicate attribute name {attribute.name!r}")
            index[attribute.name] = position
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, *pairs: Tuple[str, Kind]) -> "Header":
        return cls(tuple(Attribute(name, kind) for name, kind in pairs))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    def __iter__(self) -> Iterator[Attribute]:
        return iter(self.attributes)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownAttribute(f"no attribute {name!r} in header ({', '.join(self.names)})") from None

    def kind(self, name: str) -> Kind:
        return self.attributes[self.index(name)].kind

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def __str__(self) -> str:
        return "(" + ", ".join(str(a) for a in self.attributes) + ")"


@dataclass(frozen=True)
class Relation:
    """A header plus a set of conforming tuples, optionally keyed.

    Relations are immutable values. Operators build them through
    ``Relation.of`` (validating) or directly (trusted internal paths).
    """
    header: Header
    body: FrozenSet[Row] = frozenset()
    key: Optional[Tuple[str, ...]] = None

    @classmethod
    def of(
        cls,
        header: Header,
        rows: Iterable[Union[Sequence[Any], Mapping[str, Any]]] = (),
        key: Optional[Sequence[str]] = None,
    ) -> "Relation":
        """Build a relation, coercing every value and checking the key."""
        body = frozenset(conform_row(header, row) for row in rows)
        relation = cls(header, body, tuple(key) if key is not None else None)
        relation.validate()
        return relation

    @classmethod
    def empty(cls, header: Header, key: Optional[Sequence[str]] = None) -> "Relation":
        return cls(header, frozenset(), tuple(key) if key is not None else None)

    def __len__(self) -> int:
        return len(self.body)

    def __iter__(self) -> Iterator[Row]:
        return iter(self.body)

    @property
    def names(self) -> Tuple[str, ...]:
        return self.header.names

    def column(self, name: str) -> List[Any]:
        position = self.header.index(name)
        return [row[position] for row in self.body]

    def dicts(self) -> List[Dict[str, Any]]:
        """Rows as dictionaries, in canonical order."""
        names = self.header.names
        return [dict(zip(names, row)) for row in sorted_rows(self)]

    def validate(self) -> None:
        """Raise if a relation invariant does not hold."""
        width = len(self.header)
        for row in self.body:
            if len(row) != width:
                raise HeaderMismatch(f"tuple {row!r} does not have {width} values")
        if self.key is None:
            return
        positions = [self.header.index(name) for name in self.key]
        seen = set()
        for row in self.body:
            value = tuple(row[p] for p in positions)
            if any(v is None for v in value):
                raise KeyViolation(f"NULL in key ({', '.join(self.key)})")
            if value in seen:
                raise KeyViolation(f"duplicate key ({', '.join(self.key)}) = {value!r}")
            seen.add(value)


def conform_row(header: Header, row: Union[Sequence[Any], Mapping[str, Any]]) -> Row:
    """Coerce a positional or named row to the header; missing names are NULL."""
    if isinstance(row, Mapping):
        for name in row:
            header.index(name)
        values = [row.get(a.name) for a in header]
    else:
        values = list(row)
        if len(values) != len(header):
            raise HeaderMismatch(f"tuple {tuple(values)!r} does not have {len(header)} values")
    return tuple(coerce(a.kind, v) for a, v in zip(header, values))


def sorted_rows(relation: Relation) -> List[Row]:
    """Canonical row order: key attributes first, then the remaining ones."""
    names = relation.header.names
    order = list(relation.key or ())
    order += [n for n in names if n not in order]
    positions = [names.index(n) for n in order]
    return sorted(relation.body, key=lambda row: tuple(sort_key(row[p]) for p in positions))
