"""Relational algebra over immutable relations.

Every operator returns a new Relation satisfying the relation invariants;
none of them mutates its operands.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from errors import DuplicateOutName, HeaderMismatch, KindMismatch, UnknownAttribute
from kernel.predicates import Predicate
from kernel.relation import Attribute, Header, Relation, Row
from kernel.values import BaseKind, FLOAT, INTEGER, Kind, check_value, coerce

logger = logging.getLogger(__name__)

AGGREGATES = ("SUM", "COUNT", "MIN", "MAX", "AVG")


def r_select(rel: Relation, pred: Predicate) -> Relation:
    test = pred.bind(rel.header)
    return Relation(rel.header, frozenset(row for row in rel.body if test(row)), rel.key)


def r_project(rel: Relation, attrs: Sequence[str]) -> Relation:
    if not attrs:
        raise UnknownAttribute("projection needs at least one attribute")
    positions = [rel.header.index(a) for a in attrs]
    header = Header(tuple(rel.header.attributes[p] for p in positions))
    key = rel.key if rel.key is not None and set(rel.key) <= set(attrs) else None
    body = frozenset(tuple(row[p] for p in positions) for row in rel.body)
    return Relation(header, body, key)


def r_rename(rel: Relation, mapping: Mapping[str, str]) -> Relation:
    for old in mapping:
        rel.header.index(old)
    header = Header(tuple(Attribute(mapping.get(a.name, a.name), a.kind) for a in rel.header))
    key = tuple(mapping.get(k, k) for k in rel.key) if rel.key is not None else None
    return Relation(header, rel.body, key)


def _check_pairs(left: Relation, right: Relation, on: Sequence[Tuple[str, str]]) -> Tuple[List[int], List[int]]:
    lp, rp = [], []
    for la, ra in on:
        lk, rk = left.header.kind(la), right.header.kind(ra)
        if not lk.joinable(rk):
            raise KindMismatch(f"cannot join {la}:{lk} with {ra}:{rk}")
        lp.append(left.header.index(la))
        rp.append(right.header.index(ra))
    return lp, rp


def _joined_header(left: Header, right: Header, prefix: str) -> Tuple[Header, Dict[str, str]]:
    taken = set(left.names)
    renames: Dict[str, str] = {}
    attrs = list(left.attributes)
    for a in right:
        name = a.name
        while name in taken:
            name = prefix + name
        taken.add(name)
        renames[a.name] = name
        attrs.append(Attribute(name, a.kind))
    return Header(tuple(attrs)), renames


def _index(rel: Relation, positions: List[int]) -> Dict[Tuple[Any, ...], List[Row]]:
    index: Dict[Tuple[Any, ...], List[Row]] = defaultdict(list)
    for row in rel.body:
        value = tuple(row[p] for p in positions)
        if any(v is None for v in value):
            continue
        index[value].append(row)
    return index


def r_join(left: Relation, right: Relation, on: Sequence[Tuple[str, str]], prefix: str = "^") -> Relation:
    """Equijoin; right-side names already present on the left get ``prefix``."""
    lp, rp = _check_pairs(left, right, on)
    header, renames = _joined_header(left.header, right.header, prefix)
    index = _index(right, rp)
    body = set()
    for row in left.body:
        value = tuple(row[p] for p in lp)
        if any(v is None for v in value):
            continue
        for match in index.get(value, ()):
            body.add(row + match)
    key = None
    if left.key is not None and right.key is not None:
        key = tuple(dict.fromkeys(left.key + tuple(renames[k] for k in right.key)))
    return Relation(header, frozenset(body), key)


def r_left_join(left: Relation, right: Relation, on: Sequence[Tuple[str, str]], prefix: str = "^") -> Relation:
    """Outer equijoin keeping every left tuple; unmatched ones are NULL padded."""
    lp, rp = _check_pairs(left, right, on)
    header, _ = _joined_header(left.header, right.header, prefix)
    index = _index(right, rp)
    padding = (None,) * len(right.header)
    body = set()
    for row in left.body:
        value = tuple(row[p] for p in lp)
        matches = () if any(v is None for v in value) else index.get(value, ())
        if not matches:
            body.add(row + padding)
        for match in matches:
            body.add(row + match)
    return Relation(header, frozenset(body), None)


def r_semijoin(left: Relation, right: Relation, on: Sequence[Tuple[str, str]]) -> Relation:
    lp, rp = _check_pairs(left, right, on)
    index = _index(right, rp)
    body = frozenset(row for row in left.body if tuple(row[p] for p in lp) in index)
    return Relation(left.header, body, left.key)


def r_product(a: Relation, b: Relation) -> Relation:
    clash = set(a.names) & set(b.names)
    if clash:
        raise DuplicateOutName(f"product operands share attributes {sorted(clash)}")
    header = Header(a.header.attributes + b.header.attributes)
    body = frozenset(x + y for x in a.body for y in b.body)
    key = a.key + b.key if a.key is not None and b.key is not None else None
    return Relation(header, body, key)


def _same_header(a: Relation, b: Relation, op: str) -> None:
    if a.header != b.header:
        raise HeaderMismatch(f"{op} of {a.header} and {b.header}")


def r_union(a: Relation, b: Relation) -> Relation:
    _same_header(a, b, "union")
    return Relation(a.header, a.body | b.body, None)


def r_union_all(header: Header, relations: Iterable[Relation]) -> Relation:
    """Union of any number of relations sharing ``header``."""
    body = set()
    for rel in relations:
        if rel.header != header:
            raise HeaderMismatch(f"union of {header} and {rel.header}")
        body |= rel.body
    return Relation(header, frozenset(body), None)


def r_difference(a: Relation, b: Relation) -> Relation:
    _same_header(a, b, "difference")
    return Relation(a.header, a.body - b.body, a.key)


def r_extend(rel: Relation, name: str, kind: Kind, fn: Callable[[Row], Any]) -> Relation:
    """Append a computed attribute; ``fn`` maps a tuple to the new value."""
    if name in rel.header:
        raise DuplicateOutName(f"attribute {name!r} already exists")
    header = Header(rel.header.attributes + (Attribute(name, kind),))
    body = frozenset(row + (coerce(kind, fn(row)),) for row in rel.body)
    return Relation(header, body, rel.key)


def r_cast(rel: Relation, attr: str, kind: Kind) -> Relation:
    """Change the kind of one attribute, coercing its values."""
    position = rel.header.index(attr)
    attrs = list(rel.header.attributes)
    attrs[position] = Attribute(attr, kind)
    body = frozenset(row[:position] + (coerce(kind, row[position]),) + row[position + 1:] for row in rel.body)
    return Relation(Header(tuple(attrs)), body, rel.key)


@dataclass(frozen=True)
class AggregateSpec:
    """One aggregate column; ``attr`` is None for COUNT(*)."""
    fn: str
    attr: Optional[str]
    out: str


def _aggregate_kind(spec: AggregateSpec, header: Header) -> Kind:
    fn = spec.fn.upper()
    if fn not in AGGREGATES:
        raise KindMismatch(f"unknown aggregate {spec.fn}")
    if fn == "COUNT":
        return INTEGER
    if spec.attr is None:
        raise KindMismatch(f"{fn} needs an attribute")
    kind = header.kind(spec.attr)
    if fn in ("SUM", "AVG"):
        if not kind.is_numeric:
            raise KindMismatch(f"{fn}({spec.attr}) over non-numeric kind {kind}")
        return FLOAT if fn == "AVG" else kind
    if not (kind.is_numeric or kind.base is BaseKind.DATETIME):
        raise KindMismatch(f"{fn}({spec.attr}) over kind {kind}")
    return kind


def _fold(fn: str, values: List[Any], kind: Kind) -> Any:
    if fn == "COUNT":
        return len(values)
    if not values:
        return None
    if fn == "SUM":
        return check_value(kind, sum(values)) if kind.base is BaseKind.INTEGER else coerce(kind, float(sum(values)))
    if fn == "AVG":
        return coerce(FLOAT, sum(values) / len(values))
    return min(values) if fn == "MIN" else max(values)


def r_aggregate(rel: Relation, group_by: Sequence[str], aggs: Sequence[AggregateSpec]) -> Relation:
    """Group ``rel`` and fold each group; NULLs are excluded from aggregation input.

    With no grouping attributes the result is always a single tuple, also
    for an empty input (COUNT 0, other aggregates NULL).
    """
    group_by = list(group_by)
    outs = [spec.out for spec in aggs]
    seen = set(group_by)
    for out in outs:
        if out in seen:
            raise DuplicateOutName(f"aggregate output {out!r} clashes with another column")
        seen.add(out)
    kinds = [_aggregate_kind(spec, rel.header) for spec in aggs]
    group_positions = [rel.header.index(a) for a in group_by]
    agg_positions = [rel.header.index(s.attr) if s.attr is not None else None for s in aggs]

    groups: Dict[Tuple[Any, ...], List[Row]] = defaultdict(list)
    for row in rel.body:
        groups[tuple(row[p] for p in group_positions)].append(row)
    if not group_by and not groups:
        groups[()] = []

    body = set()
    for group, rows in groups.items():
        folded = []
        for spec, kind, position in zip(aggs, kinds, agg_positions):
            if position is None:
                values = list(rows)
            else:
                values = [row[position] for row in rows if row[position] is not None]
            folded.append(_fold(spec.fn.upper(), values, kind))
        body.add(group + tuple(folded))

    header = Header(
        tuple(rel.header.attributes[p] for p in group_positions)
        + tuple(Attribute(out, kind) for out, kind in zip(outs, kinds))
    )
    logger.debug(f"aggregate: {len(rel.body)} tuples into {len(body)} groups")
    return Relation(header, frozenset(body), None)
