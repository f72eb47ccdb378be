"""Object lifecycle, set DML and set-wise methods."""

from datetime import datetime, timezone

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from errors import (
    ArgumentMismatch,
    AssignToCalculated,
    ForeignKeyViolation,
    KeyViolation,
    KindMismatch,
    NonCompilableBody,
    UnknownComponent,
    UnrealizedComponent,
)
from catalog.registry import new_database
from kernel.values import DATETIME
from language.parser import parse_statement
from runtime.executor import execute
from runtime.methods import StepKind, compile_method, exec_method
from oracle import CELLS_SCHEMA, cells, cells_script, method_bodies, oid_of, oids, run, run_for_object, stored_objects, stored_set

SHIP = "EXEC DOCS[.Date IS NULL].DoShip('2024-01-02T00:00:00Z');"
JAN_2 = datetime(2024, 1, 2, tzinfo=timezone.utc)

ORDERS = """
CREATE CLASS ORDERS
( No STRING,
  Lines SET OF (Pos INTEGER, Parts SET OF (Part STRING) KEY(Part)) KEY(Pos)
) KEY(No);
ALTER ORDERS REALIZE No, Lines AS STORED;
NEW ORDERS WITH SET .No:="o1";
NEW ORDERS WITH SET .No:="o2";
"""


def docs(db):
    return {doc["DocN"]: doc for doc in stored_objects(db, "DOCS").values()}


def test_doship_compiles_to_one_guarded_update(d0):
    procedure = compile_method(d0, "DOCS", "DoShip")
    assert [s.kind for s in procedure.steps] == [StepKind.FLAG, StepKind.ASSIGN, StepKind.ASSIGN]
    flag = procedure.steps[0].target
    assert [(s.target, s.guard) for s in procedure.assignments] == [
        ("Date", ((flag, True),)),
        ("Comment", ((flag, True),)),
    ]
    assert procedure.params == (("inDate", DATETIME),)


def test_doship_ships_every_open_document(d0):
    db = run(d0, SHIP)
    assert {(d["Date"], d["Comment"]) for d in docs(db).values()} == {(JAN_2, "Shipped!")}
    again = run(db, "EXEC DOCS.DoShip('2024-03-01T00:00:00Z');")
    assert again == db


def test_exec_over_an_empty_selection_changes_nothing(d0):
    outcome = execute(d0, parse_statement('EXEC DOCS[.DocN="none"].DoShip(\'2024-01-02T00:00:00Z\');'))
    assert outcome.affected == 0
    assert outcome.db == d0


def test_doship_skips_documents_with_a_date(d0):
    db = run(d0, 'UPDATE DOCS[.DocN="D2"] SET .Date := \'2024-01-01T00:00:00Z\';')
    db = run(db, "EXEC DOCS.DoShip('2024-01-02T00:00:00Z');")
    assert docs(db)["D2"]["Comment"] is None
    assert docs(db)["D1"]["Comment"] == "Shipped!"


def test_exec_argument_checks(d0):
    with pytest.raises(ArgumentMismatch):
        run(d0, "EXEC DOCS.DoShip();")
    with pytest.raises(ArgumentMismatch):
        run(d0, "EXEC DOCS.DoShip(5);")
    with pytest.raises(UnknownComponent):
        run(d0, "EXEC DOCS.Ship('2024-01-02T00:00:00Z');")
    with pytest.raises(KindMismatch):
        run(d0, "EXEC DOCS.Comment('2024-01-02T00:00:00Z');")


def test_methods_cannot_assign_calculated_components(empty_db):
    db = run(empty_db, "CREATE CLASS W (A INTEGER, B INTEGER, Fix()); "
                       "ALTER W REALIZE A AS STORED; "
                       "ALTER W REALIZE B AS BEGIN RETURN 1; END; "
                       "ALTER W REALIZE Fix() AS BEGIN B := 2; END; NEW W;")
    with pytest.raises(NonCompilableBody):
        run(db, "EXEC W.Fix();")


def test_methods_cannot_read_their_own_class_by_name(empty_db):
    db = run(empty_db, "CREATE CLASS W (A INTEGER, Fix()); "
                       "ALTER W REALIZE A AS STORED; "
                       "ALTER W REALIZE Fix() AS BEGIN IF (W[.A = 1].A IS NULL) THEN A := 1; END; NEW W;")
    with pytest.raises(NonCompilableBody):
        compile_method(db, "W", "Fix")


def test_sub_selects_in_methods_read_the_starting_state(empty_db):
    db = run(empty_db, "CREATE CLASS W (A INTEGER, Fix()); "
                       "ALTER W REALIZE A AS STORED; "
                       "ALTER W REALIZE Fix() AS BEGIN A := SELECT COUNT(*) FROM W[.A IS NULL]; END; "
                       "NEW W; NEW W; NEW W;")
    db = run(db, "EXEC W.Fix();")
    assert [w["A"] for w in stored_objects(db, "W").values()] == [3, 3, 3]


def test_update_assigns_stored_components_only(d0):
    db = run(d0, 'UPDATE DOCS[.DocN="D1"] SET .Comment := .DocN + "!";')
    assert docs(db)["D1"]["Comment"] == "D1!"
    with pytest.raises(KindMismatch):
        run(d0, 'UPDATE DOCS[.DocN="D1"] SET .Comment := 5;')
    with pytest.raises(AssignToCalculated):
        run(d0, 'UPDATE GOODS SET .Pieces := 1;')


def test_new_with_a_nested_new(d0):
    db = run(d0, 'NEW CONTRACTORS WITH SET .Name:="X", .Bank:=(NEW BANKS WITH SET .Name:="B2"), .ID:="C9";')
    bank = oid_of(db, "BANKS", '.Name = "B2"')
    assert stored_objects(db, "CONTRACTORS")[oid_of(db, "CONTRACTORS", '.ID = "C9"')]["Bank"] == bank
    assert db.oid_counter == d0.oid_counter + 2


def test_new_checks_keys_and_realizations(d0):
    with pytest.raises(KeyViolation):
        run(d0, 'NEW CONTRACTORS WITH SET .ID:="CoID001";')
    with pytest.raises(UnrealizedComponent):
        run(d0, "CREATE CLASS P (A STRING, B INTEGER); ALTER P REALIZE A AS STORED; NEW P;")


def test_destroy_nulls_references(d0):
    shop = oid_of(d0, "CONTRACTORS", '.ID = "CoID001"')
    db = run(d0, 'DESTROY CONTRACTORS[.ID="CoID001"];')
    assert shop not in stored_objects(db, "CONTRACTORS")
    assert {n: d["Cntr"] for n, d in docs(db).items()} == {
        "D1": None,
        "D2": oid_of(d0, "CONTRACTORS", '.ID = "CoID002"'),
        "D3": None,
    }


def test_destroy_removes_set_rows(d0):
    d2 = oid_of(d0, "DOCS", '.DocN = "D2"')
    db = run(d0, 'DESTROY DOCS[.DocN="D2"];')
    assert d2 not in stored_set(db, "DOCS", "Items")
    assert len(db.relation("DOCS@Items").relation) == 2


def test_set_row_constraints(d0):
    with pytest.raises(KeyViolation):
        run(d0, 'INSERT INTO DOCS[.DocN="D1"].Items VALUES ("A1", 1);')
    with pytest.raises(ForeignKeyViolation):
        run(d0, 'INSERT INTO DOCS[.DocN="D1"].Items VALUES ("A9", 1);')


def test_insert_with_columns_and_delete_with_where(d0):
    db = run(d0, 'INSERT INTO DOCS[.DocN="D3"].Items (Pieces, Art) VALUES (4, "A1");')
    d3 = oid_of(db, "DOCS", '.DocN = "D3"')
    assert sorted((r["Art"], r["Pieces"]) for r in stored_set(db, "DOCS", "Items")[d3]) == [("A1", 4), ("A2", 1)]
    outcome = execute(db, parse_statement('DELETE FROM DOCS.Items WHERE .Art = "A1";'))
    assert outcome.affected == 3
    assert {r["Art"] for rows in stored_set(outcome.db, "DOCS", "Items").values() for r in rows} == {"A2"}


def test_nested_set_rows_follow_their_parent(empty_db):
    db = run(empty_db, ORDERS)
    db = run(db, 'INSERT INTO ORDERS[.No="o1"].Lines VALUES (1), (2);')
    db = run(db, 'INSERT INTO ORDERS[.No="o1"].Lines[.Pos=1].Parts VALUES ("bolt"), ("nut");')
    parts = db.relation("ORDERS@Lines@Parts").relation
    assert {(r["Lines.Pos"], r["Part"]) for r in parts.dicts()} == {(1, "bolt"), (1, "nut")}
    db = run(db, 'DELETE FROM ORDERS.Lines.Parts WHERE .Part = "nut";')
    assert [r["Part"] for r in db.relation("ORDERS@Lines@Parts").relation.dicts()] == ["bolt"]
    db = run(db, 'DELETE FROM ORDERS[.No="o1"].Lines WHERE .Pos = 1;')
    assert len(db.relation("ORDERS@Lines@Parts").relation) == 0
    assert len(db.relation("ORDERS@Lines").relation) == 1


def test_failed_statement_leaves_the_database_unchanged(d0):
    statement = parse_statement('INSERT INTO DOCS[.DocN="D1"].Items VALUES ("A2", 1), ("A9", 1);')
    with pytest.raises(ForeignKeyViolation) as info:
        execute(d0, statement)
    assert info.value.position == (1, 1)
    assert len(d0.relation("DOCS@Items").relation) == 4
    assert set(oids(d0, "DOCS")) == {oid_of(d0, "DOCS", f'.DocN = "D{n}"') for n in (1, 2, 3)}


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(method_bodies(), cells(), st.integers(0, 9), st.data())
def test_set_wise_exec_matches_per_object_execution(body, objects, k, data):
    realize = f"ALTER CELLS REALIZE Bump(k INTEGER) AS {body}"
    db = run(new_database(), CELLS_SCHEMA + realize + "\n" + cells_script(objects))
    before = stored_objects(db, "CELLS")
    chosen = data.draw(st.sets(st.sampled_from(sorted(before))))
    block = parse_statement(realize).body.block
    expected = {
        oid: run_for_object(block, state, {"k": k}) if oid in chosen else state
        for oid, state in before.items()
    }
    assert stored_objects(exec_method(db, "CELLS", chosen, "Bump", [k]), "CELLS") == expected
    for _ in range(5):
        one_by_one = db
        for oid in data.draw(st.permutations(sorted(chosen))):
            one_by_one = exec_method(one_by_one, "CELLS", [oid], "Bump", [k])
        assert stored_objects(one_by_one, "CELLS") == expected
