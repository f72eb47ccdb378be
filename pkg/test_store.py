"""Snapshot save and load."""

import pytest
from hypothesis import HealthCheck, given, settings

from errors import ConstraintError, CounterError, FormatError, IoError
from store.snapshot import MAGIC, dump_snapshot, load_snapshot, parse_snapshot, save_snapshot
from oracle import d0_schema, d0_worlds, query, run, stored_objects


def test_empty_database(empty_db):
    text = dump_snapshot(empty_db)
    assert text == f"{MAGIC}\n%CATALOG\n%DATA\n%OID 0\n"
    assert parse_snapshot(text) == empty_db


def test_snapshot_layout(d0):
    lines = dump_snapshot(d0).splitlines()
    assert lines[:3] == [MAGIC, "%CATALOG", "CREATE CLASS BANKS (Name STRING);"]
    assert "%RELATION DOCS@Items 4" in lines
    start = lines.index("%RELATION DOCS@Items 4")
    assert lines[start + 1] == "#oid:REF(DOCS)\tArt:STRING\tPieces:INTEGER"
    assert lines[-1] == f"%OID {d0.oid_counter}"


def test_round_trip_is_byte_identical(d0):
    db = run(d0, "EXEC DOCS[.Date IS NULL].DoShip('2024-01-02T00:00:00Z');")
    text = dump_snapshot(db)
    loaded = parse_snapshot(text)
    assert dump_snapshot(loaded) == text
    assert loaded.oid_counter == db.oid_counter
    assert set(query(loaded, "SELECT .Art, .Pieces FROM GOODS;").body) == {("A1", 12), ("A2", 3)}


def test_insertion_order_does_not_change_the_bytes(d0):
    base = run(d0, 'NEW DOCS WITH SET .DocN:="D4";')
    one = run(base, 'INSERT INTO DOCS[.DocN="D4"].Items VALUES ("A1", 1), ("A2", 2);')
    two = run(base, 'INSERT INTO DOCS[.DocN="D4"].Items VALUES ("A2", 2); '
                    'INSERT INTO DOCS[.DocN="D4"].Items VALUES ("A1", 1);')
    assert dump_snapshot(one) == dump_snapshot(two)


def test_strings_with_tabs_and_newlines(empty_db):
    db = run(empty_db, r'CREATE CLASS NOTES (Text STRING); ALTER NOTES REALIZE Text AS STORED; '
                       r'NEW NOTES WITH SET .Text:="a\tb\nc\\d"; NEW NOTES;')
    text = dump_snapshot(db)
    assert "a\\tb\\nc\\\\d" in text
    assert "\\N" in text
    loaded = parse_snapshot(text)
    assert sorted(n["Text"] or "" for n in stored_objects(loaded, "NOTES").values()) == ["", "a\tb\nc\\d"]


def test_bad_header_and_truncation(d0):
    text = dump_snapshot(d0)
    with pytest.raises(FormatError):
        parse_snapshot(text.replace(MAGIC, "RXO-SNAPSHOT 2"))
    with pytest.raises(FormatError):
        parse_snapshot(text[: text.index("%OID")])
    with pytest.raises(FormatError):
        parse_snapshot(text.replace("DocN:STRING", "DocN:INTEGER"))
    with pytest.raises(FormatError):
        parse_snapshot("")


def test_constraint_violations_are_rejected(d0):
    text = dump_snapshot(d0)
    lines = text.splitlines()
    start = lines.index("%RELATION DOCS@Items 4")
    duplicate = lines[start + 2].rsplit("\t", 1)[0] + "\t99"
    lines[start] = "%RELATION DOCS@Items 5"
    lines.insert(start + 2, duplicate)
    with pytest.raises(ConstraintError):
        parse_snapshot("\n".join(lines) + "\n")


def test_counter_below_stored_oids(d0):
    text = dump_snapshot(d0).replace(f"%OID {d0.oid_counter}", "%OID 1")
    with pytest.raises(CounterError):
        parse_snapshot(text)


def test_save_and_load_file(d0, tmp_path):
    path = tmp_path / "shop.rxo"
    save_snapshot(d0, path)
    assert list(tmp_path.iterdir()) == [path]
    assert dump_snapshot(load_snapshot(path)) == dump_snapshot(d0)
    with pytest.raises(IoError):
        load_snapshot(tmp_path / "missing.rxo")


QUERY_SUITE = (
    "SELECT .Art, .Pieces FROM GOODS;",
    "SELECT .DocN, .Cntr.Name FROM DOCS;",
    "SELECT .DocN, SUM(.Items.Pieces) AS Total FROM DOCS GROUP BY .DocN;",
    "SELECT .Name, .ID FROM GOODS.Turnover.Cntr;",
    "SELECT .Art FROM GOODS[.Turnover.Pieces > 4];",
)


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(d0_worlds())
def test_generated_databases_survive_a_round_trip(world):
    db = run(d0_schema(), world)
    text = dump_snapshot(db)
    loaded = parse_snapshot(text)
    assert dump_snapshot(loaded) == text
    for statement in QUERY_SUITE:
        assert set(query(loaded, statement).body) == set(query(db, statement).body)
