"""O-views, selections and calculated components."""

from collections import Counter

import pytest
from hypothesis import HealthCheck, given, settings

from errors import AggregateMisuse, CyclicRealization, DuplicateOutName, ProcedureNoReturn, TerminalScalarPath
from catalog.model import MemberKind
from catalog.registry import class_names, resolve_interface
from language.parser import parse_statement
from query.calculated import eval_calculated
from query.context import QueryContext
from query.oview import evaluate_select, resolve_oview
from oracle import (
    ARTS,
    NAMES,
    d0_schema,
    d0_worlds,
    oid_of,
    oids,
    pieces,
    query,
    run,
    stored_objects,
    stored_set,
    trading_names,
    turnover,
)


def rows(relation):
    return set(relation.body)


def test_turnover_groups_documents_per_good(d0):
    shop = oid_of(d0, "CONTRACTORS", '.ID = "CoID001"')
    other = oid_of(d0, "CONTRACTORS", '.ID = "CoID002"')
    a1 = oid_of(d0, "GOODS", '.Art = "A1"')
    result = eval_calculated(d0, "GOODS", a1, "Turnover")
    assert result.names == ("DocN", "Cntr", "Pieces")
    assert rows(result) == {("D1", shop, 5), ("D2", other, 7)}


def test_pieces_procedure(d0):
    assert eval_calculated(d0, "GOODS", oid_of(d0, "GOODS", '.Art = "A1"'), "Pieces") == 12
    assert eval_calculated(d0, "GOODS", oid_of(d0, "GOODS", '.Art = "A2"'), "Pieces") == 3
    db = run(d0, 'NEW GOODS WITH SET .Art:="A3";')
    assert eval_calculated(db, "GOODS", oid_of(db, "GOODS", '.Art = "A3"'), "Pieces") == 0


def test_select_goods_by_a_path_through_a_calculated_set(d0):
    result = query(d0, 'SELECT .Art FROM GOODS[.Turnover.Cntr.Name="TheShop"];')
    assert rows(result) == {("A1",), ("A2",)}
    assert rows(query(d0, 'SELECT .Art FROM GOODS[.Art="A1"];')) == {("A1",)}
    assert rows(query(d0, "SELECT .Art FROM GOODS[.Turnover.Pieces > 6];")) == {("A1",)}


def test_select_through_a_set_and_a_reference(d0):
    result = query(d0, 'SELECT .Name, .Bank.Name FROM GOODS[.Art="A1"].Turnover.Cntr;')
    assert result.names == (".Name", ".Bank.Name")
    assert rows(result) == {("TheShop", "TheBank"), ("OtherCo", "TheBank")}


def test_oview_expands_post_paths(d0):
    view = resolve_oview(d0, 'GOODS[.Art="A1"].Turnover.Cntr')
    assert {".#", ".Name", ".ID", ".Bank.#", ".Bank.Name"} <= set(view.header.names)
    assert len(set(view.relation.column(".#"))) == 2


def test_scalar_path_is_not_an_oview(d0):
    with pytest.raises(TerminalScalarPath):
        resolve_oview(d0, "BANKS.Name")


def test_selection_by_reference_path(d0):
    found = oids(d0, "DOCS", '.Cntr.Name = "TheShop"')
    assert {stored_objects(d0, "DOCS")[oid]["DocN"] for oid in found} == {"D1", "D3"}


def test_aggregates_and_grouping(d0):
    assert rows(query(d0, "SELECT COUNT(*) FROM DOCS;")) == {(3,)}
    totals = query(d0, "SELECT .DocN, SUM(.Items.Pieces) AS Total FROM DOCS GROUP BY .DocN;")
    assert totals.names == (".DocN", "Total")
    assert rows(totals) == {("D1", 5), ("D2", 9), ("D3", 1)}
    with pytest.raises(AggregateMisuse):
        query(d0, "SELECT COUNT(*) FROM DOCS GROUP BY COUNT(*);")


def test_alias_and_where(d0):
    result = query(d0, 'SELECT #g.DocN FROM DOCS #g WHERE #g.Cntr.ID = "CoID001";')
    assert rows(result) == {("D1",), ("D3",)}


def test_null_tests(d0):
    assert len(query(d0, "SELECT .DocN FROM DOCS[.Date IS NULL];")) == 3
    assert len(query(d0, 'SELECT .DocN FROM DOCS[.Date = "2024-01-01T00:00:00Z"];')) == 0


def test_star_and_duplicate_output_names(d0):
    assert rows(query(d0, "SELECT * FROM BANKS;")) == {("TheBank",)}
    with pytest.raises(DuplicateOutName):
        query(d0, "SELECT .Name, .Name FROM BANKS;")


def test_realization_swap_is_transparent(d0):
    stored = run(d0, 'ALTER GOODS REALIZE Pieces AS STORED; '
                     'UPDATE GOODS[.Art="A1"] SET .Pieces := 12; '
                     'UPDATE GOODS[.Art="A2"] SET .Pieces := 3;')
    for text in ("SELECT .Art, .Pieces FROM GOODS;", "SELECT .Art FROM GOODS[.Pieces > 5];"):
        assert rows(query(d0, text)) == rows(query(stored, text))


def test_stored_turnover_answers_like_the_calculated_one(d0):
    stored = run(d0, 'ALTER GOODS REALIZE Turnover AS STORED; '
                     'INSERT INTO GOODS[.Art="A1"].Turnover VALUES '
                     '("D1", CONTRACTORS[.ID="CoID001"], 5), ("D2", CONTRACTORS[.ID="CoID002"], 7); '
                     'INSERT INTO GOODS[.Art="A2"].Turnover VALUES '
                     '("D2", CONTRACTORS[.ID="CoID002"], 2), ("D3", CONTRACTORS[.ID="CoID001"], 1);')
    assert stored.has_relation("GOODS@Turnover")
    for text in (
        'SELECT .Art FROM GOODS[.Turnover.Cntr.Name="TheShop"];',
        "SELECT .Art FROM GOODS[.Turnover.Pieces > 6];",
        'SELECT .Name, .Bank.Name FROM GOODS[.Art="A1"].Turnover.Cntr;',
        "SELECT .Art, SUM(.Turnover.Pieces) AS Total FROM GOODS GROUP BY .Art;",
    ):
        assert rows(query(d0, text)) == rows(query(stored, text))


def test_cyclic_realizations_are_detected(empty_db):
    db = run(empty_db, "CREATE CLASS Q (A INTEGER, B INTEGER); "
                       "ALTER Q REALIZE A AS BEGIN RETURN B; END; "
                       "ALTER Q REALIZE B AS BEGIN RETURN A; END; NEW Q;")
    with pytest.raises(CyclicRealization):
        query(db, "SELECT .A FROM Q;")


def test_procedure_must_return(empty_db):
    db = run(empty_db, "CREATE CLASS Q (A INTEGER); ALTER Q REALIZE A AS BEGIN IF (1 = 2) THEN RETURN 1; END; NEW Q;")
    with pytest.raises(ProcedureNoReturn):
        query(db, "SELECT .A FROM Q;")


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(d0_worlds())
def test_selection_and_oview_agree(world):
    db = run(d0_schema(), world)
    for art in ARTS:
        found = oids(db, "GOODS", f'.Art = "{art}"')
        if not found:
            continue
        expected = trading_names(db, art)
        view = query(db, f'SELECT .Name FROM GOODS[.Art="{art}"].Turnover.Cntr;')
        for name in NAMES:
            selected = found <= oids(db, "GOODS", f'.Turnover.Cntr.Name = "{name}"')
            assert selected == (name in view.column(".Name")) == (name in expected)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(d0_worlds())
def test_calculated_components_match_the_object_model(world):
    db = run(d0_schema(), world)
    for oid, good in stored_objects(db, "GOODS").items():
        assert rows(eval_calculated(db, "GOODS", oid, "Turnover")) == turnover(db, good["Art"])
        assert eval_calculated(db, "GOODS", oid, "Pieces") == pieces(db, good["Art"])


def _docs_by_name(db):
    contractors = stored_objects(db, "CONTRACTORS")
    return {
        oid: (doc["DocN"], contractors[doc["Cntr"]]["Name"] if doc["Cntr"] is not None else None)
        for oid, doc in stored_objects(db, "DOCS").items()
    }


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(d0_worlds())
def test_selects_match_the_object_model(world):
    db = run(d0_schema(), world)
    docs = _docs_by_name(db)
    items = stored_set(db, "DOCS", "Items")

    def select(text):
        return rows(evaluate_select(QueryContext(db), parse_statement(text)))

    assert select("SELECT .DocN, .Cntr.Name FROM DOCS;") == set(docs.values())
    assert select("SELECT .DocN, .Items.Art, .Items.Pieces FROM DOCS WHERE .Items.Pieces > 3;") == {
        (docs[oid][0], item["Art"], item["Pieces"])
        for oid, lines in items.items()
        for item in lines
        if item["Pieces"] > 3
    }
    counts = Counter(name for _, name in docs.values() if name is not None)
    assert select(
        "SELECT .Cntr.Name, COUNT(*) AS N FROM DOCS WHERE .Cntr.Name IS NOT NULL GROUP BY .Cntr.Name;"
    ) == set(counts.items())


def _paths(db, scope, prefix, depth):
    members = resolve_interface(db, scope) if isinstance(scope, str) else scope.members
    for member in members:
        if member.kind is MemberKind.METHOD:
            continue
        path = prefix + (member.name,)
        yield path, member.kind is MemberKind.SCALAR
        if len(path) == depth:
            continue
        if member.kind is MemberKind.SET:
            yield from _paths(db, member, path, depth)
        elif member.kind is MemberKind.REFERENCE:
            yield from _paths(db, member.target, path, depth)


def test_every_path_up_to_four_segments_resolves(d0):
    checked = 0
    for class_name in class_names(d0):
        for path, terminal in _paths(d0, class_name, (class_name,), 4):
            text = ".".join(path)
            if terminal:
                with pytest.raises(TerminalScalarPath):
                    resolve_oview(d0, text)
                continue
            view = resolve_oview(d0, text)
            if view.scope.scope == "class":
                assert ".#" in view.relation.header.names
            checked += 1
    assert checked >= 10
