"""Storage derivation for realized classes."""

import pytest

from errors import MissingComponentKey
from schema.storage import OID, layout_for, root_name, storage_for
from oracle import run, stored_objects

ORDERS = """
CREATE CLASS ORDERS
( No STRING,
  Lines SET OF (Pos INTEGER, Parts SET OF (Part STRING) KEY(Part)) KEY(Pos)
) KEY(No);
ALTER ORDERS REALIZE No, Lines AS STORED;
"""


def test_stored_relations_follow_the_realizations(d0):
    assert set(d0.relations) == {"BANKS@obj", "CONTRACTORS@obj", "GOODS@obj", "DOCS@obj", "DOCS@Items"}
    assert d0.relation("DOCS@obj").header.names == (OID, "DocN", "Date", "Comment", "Cntr")
    assert d0.relation("GOODS@obj").header.names == (OID, "Art")
    items = d0.relation("DOCS@Items").relation
    assert items.names == (OID, "Art", "Pieces")
    assert items.key == (OID, "Art")


def test_references_and_class_keys_become_constraints(d0):
    docs = d0.relation("DOCS@obj")
    assert [(fk.attrs, fk.targets) for fk in docs.foreign_keys] == [(("Cntr",), ("CONTRACTORS@obj",))]
    items = d0.relation("DOCS@Items")
    assert [(fk.attrs, fk.targets, fk.target_attrs) for fk in items.foreign_keys] == [
        ((OID,), ("DOCS@obj",), (OID,)),
        (("Art",), ("GOODS@obj",), ("Art",)),
    ]
    assert {(u.name, u.attrs) for u in d0.uniques} == {
        ("CONTRACTORS.KEY", ("ID",)),
        ("GOODS.KEY", ("Art",)),
        ("DOCS.KEY", ("DocN",)),
    }


def test_nested_sets_carry_the_parent_key(empty_db):
    db = run(empty_db, ORDERS)
    layout = layout_for(db, "ORDERS", ["Lines", "Parts"])
    assert layout.relation == "ORDERS@Lines@Parts"
    assert layout.header.names == (OID, "Lines.Pos", "Part")
    assert layout.key == (OID, "Lines.Pos", "Part")
    assert storage_for(db, "ORDERS", ("Lines", "Parts")).relation == "ORDERS@Lines@Parts"


def test_nested_set_needs_a_parent_key(empty_db):
    with pytest.raises(MissingComponentKey):
        run(empty_db, "CREATE CLASS ORDERS (Lines SET OF (Pos INTEGER, Parts SET OF (Part STRING))); "
                      "ALTER ORDERS REALIZE Lines AS STORED;")


def test_class_without_realizations_has_no_storage(empty_db):
    db = run(empty_db, "CREATE CLASS P (A STRING, B INTEGER);")
    assert root_name("P") not in db.relations


def test_switching_to_stored_keeps_existing_rows(empty_db):
    db = run(empty_db, 'CREATE CLASS P (A STRING, B INTEGER); ALTER P REALIZE A AS STORED; '
                       'ALTER P REALIZE B AS BEGIN RETURN 1; END; NEW P WITH SET .A:="x";')
    assert "B" not in db.relation(root_name("P")).header
    db = run(db, "ALTER P REALIZE B AS STORED;")
    assert list(stored_objects(db, "P").values()) == [{"A": "x", "B": None}]


def test_subclass_storage_is_flattened(d0):
    db = run(d0, "CREATE CLASS VALUERECORDS (Amount FLOAT); ALTER VALUERECORDS REALIZE Amount AS STORED; "
                 "CREATE CLASS SALES EXTEND DOCS, VALUERECORDS ();")
    assert db.relation("SALES@obj").header.names == (OID, "DocN", "Date", "Comment", "Cntr", "Amount")
    assert "SALES@Items" in db.relations
    docs_key = next(u for u in db.uniques if u.name == "DOCS.KEY")
    assert docs_key.relations == ("DOCS@obj", "SALES@obj")
