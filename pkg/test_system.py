"""End-to-end run of the goods-and-documents scenario through the shell."""

from datetime import datetime, timezone

import pytest

from oracle import SCRIPTS, oid_of, query, stored_objects
from query.calculated import eval_calculated
from shell.session import Session, run_script
from store.snapshot import dump_snapshot, load_snapshot

SHIPPED = datetime(2024, 1, 2, tzinfo=timezone.utc)


@pytest.fixture
def scenario(tmp_path):
    db_path = tmp_path / "scenario.rxo"
    out, errors = [], []

    def echo(text="", err=False):
        (errors if err else out).append(text)

    session = Session.open(db_path, autosave=True, output_format="tsv")
    code = run_script(session, SCRIPTS / "goods_scenario.rxo", echo)
    return code, session, out, errors, db_path


def test_scenario_runs_cleanly(scenario):
    code, _, out, err, _ = scenario
    assert code == 0
    assert not err
    assert ".Name\t.Bank.Name\nOtherCo\tTheBank\nTheShop\tTheBank" in out
    assert ".Art\t.Pieces\nA1\t8\nA2\t4" in out
    assert ".Art\nA1" in out


def test_only_open_documents_were_shipped(scenario):
    _, session, out, _, _ = scenario
    docs = {d["DocN"]: d for d in stored_objects(session.db, "DOCS").values()}
    assert set(docs) == {"D1", "S1"}
    for doc in docs.values():
        assert doc["Date"] == SHIPPED
        assert doc["Comment"] == "Shipped!"
    assert "OK (0 rows affected)" in out
    assert "OK (2 rows affected)" in out


def test_destroyed_contractor_leaves_null_references(scenario):
    _, session, _, _, _ = scenario
    rows = set(query(session.db, "SELECT .DocN, .Cntr.Name FROM DOCS;").body)
    assert rows == {("D1", None), ("S1", "OtherCo")}
    assert {c["ID"] for c in stored_objects(session.db, "CONTRACTORS").values()} == {"CoID002"}


def test_sales_items_are_calculated_from_saled_items(scenario):
    _, session, _, _, _ = scenario
    s1 = oid_of(session.db, "SALES", '.DocN = "S1"')
    items = eval_calculated(session.db, "SALES", s1, "Items")
    assert set(items.body) == {("A1", 3), ("A2", 4)}
    assert stored_objects(session.db, "SALES")[s1]["Amount"] == 12.5


def test_saved_file_matches_the_session(scenario):
    _, session, _, _, db_path = scenario
    assert db_path.read_text(encoding="utf-8") == dump_snapshot(session.db)
    assert dump_snapshot(load_snapshot(db_path)) == dump_snapshot(session.db)
