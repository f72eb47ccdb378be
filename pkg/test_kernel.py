"""Relational machine: values, relations, algebra and constraints."""

from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from errors import ConstraintViolation, ForeignKeyViolation, HeaderMismatch, KeyViolation, KindMismatch
from kernel.algebra import AggregateSpec, r_aggregate, r_join, r_left_join, r_project, r_select, r_semijoin, r_union
from kernel.database import (
    Database,
    Delete,
    ForeignKey,
    Insert,
    StoredRelation,
    Update,
    apply_mutation,
    apply_mutations,
    scan_violations,
)
from kernel.predicates import Cmp, IsNull, Not, compare, equals
from kernel.relation import Header, Relation, sorted_rows
from kernel.values import DATETIME, FLOAT, INTEGER, STRING, coerce, render

ITEMS = Header.of(("Art", STRING), ("Pieces", INTEGER))
GOODS = Header.of(("Art", STRING), ("Price", FLOAT))


def items(*rows):
    return Relation.of(ITEMS, rows)


def machine() -> Database:
    goods = StoredRelation("goods", Relation.of(GOODS, [("A1", 1.5)], key=["Art"]))
    lines = StoredRelation(
        "lines",
        Relation.empty(ITEMS, key=["Art"]),
        (ForeignKey(("Art",), ("goods",), ("Art",)),),
    )
    return Database({"goods": goods, "lines": lines})


def test_coerce_is_lossless_only():
    assert coerce(FLOAT, 2) == 2.0
    assert coerce(DATETIME, "2024-01-02T00:00:00Z") == datetime(2024, 1, 2, tzinfo=timezone.utc)
    assert coerce(FLOAT, -0.0) == 0.0
    with pytest.raises(KindMismatch):
        coerce(INTEGER, 2.5)
    with pytest.raises(KindMismatch):
        coerce(INTEGER, True)
    with pytest.raises(KindMismatch):
        coerce(FLOAT, float("nan"))


@pytest.mark.parametrize("value", [float("inf"), float("-inf"), 1e308 * 10])
def test_coerce_rejects_infinite_floats(value):
    with pytest.raises(KindMismatch):
        coerce(FLOAT, value)


def test_render_null_and_floats():
    assert render(None) == "NULL"
    assert render(1.5) == "1.5"
    assert render(False) == "false"


def test_relation_has_set_semantics():
    rel = items(("A1", 5), ("A1", 5), ("A2", 1))
    assert len(rel) == 2


def test_relation_rejects_wrong_width_and_duplicate_key():
    with pytest.raises(HeaderMismatch):
        items(("A1",))
    with pytest.raises(KeyViolation):
        Relation.of(ITEMS, [("A1", 1), ("A1", 2)], key=["Art"])


def test_comparisons_with_null_are_false():
    assert compare("=", None, None) is False
    assert compare("<>", 1, None) is False
    rel = items(("A1", None), ("A2", 3))
    assert len(r_select(rel, Cmp("Pieces", ">", 0))) == 1
    assert len(r_select(rel, Not(Cmp("Pieces", ">", 0)))) == 1
    assert r_select(rel, IsNull("Pieces")).column("Art") == ["A1"]


def test_join_skips_nulls_and_left_join_pads():
    left = items(("A1", 5), (None, 1))
    right = Relation.of(GOODS, [("A1", 1.5), ("A2", 2.0)])
    joined = r_join(left, right, [("Art", "Art")])
    assert joined.names == ("Art", "Pieces", "^Art", "Price")
    assert len(joined) == 1
    padded = r_left_join(left, right, [("Art", "Art")])
    assert sorted(padded.column("Price"), key=lambda v: v is None) == [1.5, None]


def test_join_pairs_must_have_equal_kinds():
    ints = Relation.of(Header.of(("a", INTEGER)), [(1,)])
    floats = Relation.of(Header.of(("b", FLOAT)), [(1.0,)])
    for join in (r_join, r_left_join, r_semijoin):
        with pytest.raises(KindMismatch):
            join(ints, floats, [("a", "b")])


def test_aggregate_over_empty_input_has_one_row():
    result = r_aggregate(items(), [], [AggregateSpec("COUNT", None, "n"), AggregateSpec("SUM", "Pieces", "total")])
    assert result.dicts() == [{"n": 0, "total": None}]


def test_aggregate_ignores_nulls():
    rel = items(("A1", 5), ("A2", None), ("A3", 2))
    result = r_aggregate(rel, [], [AggregateSpec("SUM", "Pieces", "total"), AggregateSpec("COUNT", "Pieces", "n")])
    assert result.dicts() == [{"total": 7, "n": 2}]


def test_sorted_rows_puts_null_first():
    rel = items(("B", 1), (None, 2), ("A", 3))
    assert [row[0] for row in sorted_rows(rel)] == [None, "A", "B"]


def test_mutations_are_checked_once_at_the_end():
    db = machine()
    db = apply_mutations(db, [Insert("lines", (("A9", 1),)), Insert("goods", (("A9", 2.0),))])
    assert len(db.relation("lines").relation) == 1


def test_failed_mutation_leaves_database_unchanged():
    db = machine()
    with pytest.raises(ForeignKeyViolation):
        apply_mutations(db, [Insert("lines", (("A9", 1),))])
    with pytest.raises(KeyViolation):
        apply_mutations(db, [Insert("goods", (("A1", 3.0),))])
    assert db == machine()


def test_update_and_delete():
    db = apply_mutation(machine(), Insert("lines", (("A1", 1),)))
    db = apply_mutations(db, [Update("lines", {"Pieces": lambda row: row["Pieces"] + 4}, equals({"Art": "A1"}))])
    assert db.relation("lines").relation.dicts() == [{"Art": "A1", "Pieces": 5}]
    db = apply_mutations(db, [Delete("lines")])
    assert len(db.relation("lines").relation) == 0


def test_oid_counter_and_max_oid():
    db = Database()
    db, first = db.allocate_oid()
    db, second = db.allocate_oid()
    assert (first, second, db.oid_counter) == (1, 2, 2)
    assert db.max_oid() == 0


@given(st.lists(st.tuples(st.sampled_from(["A1", "A2", "A3"]), st.integers(0, 9)), max_size=8))
def test_project_then_select_commutes_with_select_then_project(rows):
    rel = items(*rows)
    pred = Cmp("Art", "=", "A2")
    assert r_select(r_project(rel, ["Art"]), pred) == r_project(r_select(rel, pred), ["Art"])


ARTS = st.sampled_from([None, "A1", "A2", "A3"])
item_rows = st.lists(st.tuples(ARTS, st.integers(0, 3)), max_size=32)
goods_rows = st.lists(st.tuples(ARTS, st.sampled_from([0.5, 1.5, 2.0])), max_size=32)


@given(item_rows, goods_rows)
def test_join_matches_nested_loops(left_rows, right_rows):
    left, right = items(*left_rows), Relation.of(GOODS, right_rows)
    expected = {
        lt + rt
        for lt in left.body
        for rt in right.body
        if lt[0] is not None and lt[0] == rt[0]
    }
    assert r_join(left, right, [("Art", "Art")]).body == expected


@given(item_rows, item_rows, item_rows)
def test_union_is_commutative_and_associative(a, b, c):
    a, b, c = items(*a), items(*b), items(*c)
    assert r_union(a, b) == r_union(b, a)
    assert r_union(r_union(a, b), c) == r_union(a, r_union(b, c))
    assert r_union(a, a).body == a.body


mutations = st.one_of(
    st.builds(lambda art, price: Insert("goods", ((art, price),)), ARTS, st.sampled_from([0.5, 1.5])),
    st.builds(lambda art, n: Insert("lines", ((art, n),)), ARTS, st.integers(0, 9)),
    st.builds(lambda art: Delete("goods", equals({"Art": art})), ARTS),
    st.builds(lambda art: Delete("lines", equals({"Art": art})), ARTS),
    st.builds(lambda n: Update("lines", {"Pieces": n}), st.integers(0, 9)),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(mutations, max_size=20))
def test_successful_mutations_leave_no_violations(sequence):
    db = machine()
    for mutation in sequence:
        try:
            db = apply_mutation(db, mutation)
        except ConstraintViolation:
            continue
    assert scan_violations(db) == []
