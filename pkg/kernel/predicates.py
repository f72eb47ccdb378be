"""Tuple predicates for r_select and bulk mutations.

Logic is two-valued: any comparison with a NULL operand is false; only
``IsNull`` observes NULLs.
"""

import operator
from dataclasses import dataclass
from typing import Any, Callable, FrozenSet, Mapping, Sequence, Set, Tuple

from errors import KindMismatch
from kernel.relation import Header, Row

TupleTest = Callable[[Row], bool]

COMPARATORS = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def compare(op: str, left: Any, right: Any) -> bool:
    """Two-valued comparison; NULL on either side is false."""
    if left is None or right is None:
        return False
    try:
        return bool(COMPARATORS[op](left, right))
    except TypeError:
        raise KindMismatch(f"cannot compare {left!r} {op} {right!r}") from None


class Predicate:
    """Base class; ``bind`` compiles the predicate against a header."""

    def attributes(self) -> Set[str]:
        raise NotImplementedError

    def bind(self, header: Header) -> TupleTest:
        raise NotImplementedError

    def __and__(self, other: "Predicate") -> "Predicate":
        return And((self, other))

    def __or__(self, other: "Predicate") -> "Predicate":
        return Or((self, other))

    def __invert__(self) -> "Predicate":
        return Not(self)


@dataclass(frozen=True)
class TruePredicate(Predicate):
    def attributes(self) -> Set[str]:
        return set()

    def bind(self, header: Header) -> TupleTest:
        return lambda row: True


TRUE = TruePredicate()


@dataclass(frozen=True)
class Cmp(Predicate):
    """``attr op constant``."""
    attr: str
    op: str
    value: Any

    def attributes(self) -> Set[str]:
        return {self.attr}

    def bind(self, header: Header) -> TupleTest:
        position = header.index(self.attr)
        op, value = self.op, self.value
        return lambda row: compare(op, row[position], value)


@dataclass(frozen=True)
class AttrCmp(Predicate):
    """``left op right`` between two attributes of the same tuple."""
    left: str
    op: str
    right: str

    def attributes(self) -> Set[str]:
        return {self.left, self.right}

    def bind(self, header: Header) -> TupleTest:
        lp, rp = header.index(self.left), header.index(self.right)
        op = self.op
        return lambda row: compare(op, row[lp], row[rp])


@dataclass(frozen=True)
class IsNull(Predicate):
    attr: str
    negated: bool = False

    def attributes(self) -> Set[str]:
        return {self.attr}

    def bind(self, header: Header) -> TupleTest:
        position = header.index(self.attr)
        if self.negated:
            return lambda row: row[position] is not None
        return lambda row: row[position] is None


@dataclass(frozen=True)
class In(Predicate):
    """Membership of an attribute value in a constant set (OID sets mostly)."""
    attr: str
    values: FrozenSet[Any]

    def attributes(self) -> Set[str]:
        return {self.attr}

    def bind(self, header: Header) -> TupleTest:
        position = header.index(self.attr)
        values = self.values
        return lambda row: row[position] is not None and row[position] in values


@dataclass(frozen=True)
class And(Predicate):
    parts: Tuple[Predicate, ...]

    def attributes(self) -> Set[str]:
        return set().union(*(p.attributes() for p in self.parts))

    def bind(self, header: Header) -> TupleTest:
        tests = [p.bind(header) for p in self.parts]
        return lambda row: all(t(row) for t in tests)


@dataclass(frozen=True)
class Or(Predicate):
    parts: Tuple[Predicate, ...]

    def attributes(self) -> Set[str]:
        return set().union(*(p.attributes() for p in self.parts))

    def bind(self, header: Header) -> TupleTest:
        tests = [p.bind(header) for p in self.parts]
        return lambda row: any(t(row) for t in tests)


@dataclass(frozen=True)
class Not(Predicate):
    part: Predicate

    def attributes(self) -> Set[str]:
        return self.part.attributes()

    def bind(self, header: Header) -> TupleTest:
        test = self.part.bind(header)
        return lambda row: not test(row)


@dataclass(frozen=True)
class Where(Predicate):
    """Arbitrary test over named attributes.

    ``fn`` receives a mapping from each declared attribute to its value.
    """
    fn: Callable[[Mapping[str, Any]], bool]
    attrs: Tuple[str, ...]

    def attributes(self) -> Set[str]:
        return set(self.attrs)

    def bind(self, header: Header) -> TupleTest:
        positions = [(name, header.index(name)) for name in self.attrs]
        fn = self.fn
        return lambda row: bool(fn({name: row[p] for name, p in positions}))


def equals(values: Mapping[str, Any]) -> Predicate:
    """Conjunction of ``attr = value``; NULL values match IS NULL."""
    parts = [IsNull(a) if v is None else Cmp(a, "=", v) for a, v in values.items()]
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def one_of(attrs: Sequence[str], rows: Set[Tuple[Any, ...]]) -> Predicate:
    """Tuple-membership predicate over several attributes."""
    attrs = tuple(attrs)
    frozen = frozenset(rows)
    return Where(lambda values: tuple(values[a] for a in attrs) in frozen, attrs)
