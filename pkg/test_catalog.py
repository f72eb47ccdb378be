"""Classes, inheritance and realizations."""

import pytest

from errors import (
    AlreadyStored,
    AmbiguousMember,
    DuplicateClass,
    KindMismatch,
    MemberCollision,
    StoredDataLoss,
    UnknownParent,
)
from catalog.model import RealizationKind
from catalog.registry import (
    active_realization,
    describe_class,
    descendants,
    extent_classes,
    linearize,
    lookup_path,
    resolve_interface,
)
from oracle import run

SALES_DDL = """
CREATE CLASS VALUERECORDS (Amount FLOAT);
CREATE CLASS SALES EXTEND DOCS, VALUERECORDS
( SaledItems SET OF (Art STRING, Price FLOAT, Pieces INTEGER) KEY(Art, Price) );
ALTER VALUERECORDS REALIZE Amount AS STORED;
ALTER SALES REALIZE SaledItems AS STORED;
ALTER SALES REALIZE Items AS SELECT Art, SUM(Pieces) FROM SaledItems GROUP BY Art;
"""

DIAMOND = """
CREATE CLASS A (X STRING);
CREATE CLASS B EXTEND A (Y STRING);
CREATE CLASS C EXTEND A (Z STRING);
CREATE CLASS D EXTEND B, C ();
"""


@pytest.fixture
def sales(schema_db):
    return run(schema_db, SALES_DDL)


def test_interface_lists_parents_in_extend_order(sales):
    names = [m.name for m in resolve_interface(sales, "SALES")]
    assert names == ["DocN", "Date", "Comment", "Cntr", "Items", "DoShip", "Amount", "SaledItems"]
    assert linearize(sales, "SALES") == ["SALES", "DOCS", "VALUERECORDS"]


def test_extents_include_descendants(sales):
    assert extent_classes(sales, "DOCS") == ["DOCS", "SALES"]
    assert descendants(sales, "VALUERECORDS") == ["SALES"]


def test_diamond_shares_one_declaration(empty_db):
    db = run(empty_db, DIAMOND)
    assert linearize(db, "D") == ["D", "B", "C", "A"]
    assert [m.name for m in resolve_interface(db, "D")] == ["X", "Y", "Z"]


def test_same_name_from_two_declarations_is_ambiguous(empty_db):
    with pytest.raises(AmbiguousMember):
        run(empty_db, "CREATE CLASS B (X STRING); CREATE CLASS C (X STRING); CREATE CLASS D EXTEND B, C ();")


def test_redeclaring_an_inherited_member_collides(empty_db):
    with pytest.raises(MemberCollision):
        run(empty_db, "CREATE CLASS A (X STRING); CREATE CLASS B EXTEND A (X INTEGER);")


def test_duplicate_and_unknown_classes(empty_db):
    db = run(empty_db, "CREATE CLASS A (X STRING);")
    with pytest.raises(DuplicateClass):
        run(db, "CREATE CLASS A (Y STRING);")
    with pytest.raises(UnknownParent):
        run(db, "CREATE CLASS B EXTEND Q (Y STRING);")


def test_subclass_realization_shadows_the_parent(sales):
    own = active_realization(sales, "SALES", "Items")
    assert own.kind is RealizationKind.QUERY and own.owner == "SALES"
    assert active_realization(sales, "DOCS", "Items").kind is RealizationKind.STORED
    assert active_realization(sales, "SALES", "DocN").owner == "DOCS"


def test_describe_class(sales):
    rows = {member: how for member, _, how in describe_class(sales, "SALES")}
    assert rows["Items"] == "query"
    assert rows["DocN"] == "stored (from DOCS)"
    assert rows["DoShip"] == "procedure (from DOCS)"
    assert rows["Amount"] == "stored (from VALUERECORDS)"


def test_realization_checks(d0):
    with pytest.raises(AlreadyStored):
        run(d0, "ALTER BANKS REALIZE Name AS STORED;")
    with pytest.raises(KindMismatch):
        run(d0, "ALTER DOCS REALIZE DoShip(inDate DATETIME) AS STORED;")
    with pytest.raises(StoredDataLoss):
        run(d0, 'ALTER DOCS REALIZE DocN AS SELECT .Name FROM BANKS;')


def test_lookup_path_resolves_members_before_classes(d0):
    path = lookup_path(d0, ["Turnover", "Cntr", "Name"], context="GOODS")
    assert [s.scope for s in path.steps] == ["set", "class", "scalar"]
    assert path.steps[1].class_name == "CONTRACTORS"
    assert path.is_scalar
    assert lookup_path(d0, ["DOCS", "Items"]).terminal.scope == "set"
