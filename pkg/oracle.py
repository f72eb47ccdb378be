"""Test support: script helpers, a brute-force object model and data generators.

The object model reads stored relations back into plain dictionaries and
recomputes calculated components and method effects with ordinary loops,
one object at a time. Property tests compare the engine against it.
"""

from collections import defaultdict
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Set, Tuple

from hypothesis import strategies as st

from catalog.registry import extent_classes, new_database
from kernel.database import Database
from language import ast
from language.parser import iter_statements
from query.oview import compile_selection
from runtime.executor import execute
from schema.storage import OID, root_name, set_relation_name

SCRIPTS = Path(__file__).parent / "scripts"
D0_SCRIPT = SCRIPTS / "d0_fixture.rxo"
OBJECTS_MARKER = "// Objects"


def run(db: Database, text: str) -> Database:
    for statement in iter_statements(text):
        db = execute(db, statement).db
    return db


def query(db: Database, text: str):
    """Relation produced by the last statement of ``text``."""
    relation = None
    for statement in iter_statements(text):
        outcome = execute(db, statement)
        db, relation = outcome.db, outcome.relation
    return relation


def oids(db: Database, class_name: str, predicate: Optional[str] = None) -> FrozenSet[int]:
    return compile_selection(db, class_name, predicate).oids


def oid_of(db: Database, class_name: str, predicate: str) -> int:
    found = oids(db, class_name, predicate)
    assert len(found) == 1, f"{class_name}[{predicate}] matched {len(found)} objects"
    return next(iter(found))


@lru_cache(maxsize=None)
def d0_schema() -> Database:
    text = D0_SCRIPT.read_text(encoding="utf-8").split(OBJECTS_MARKER, 1)[0]
    return run(new_database(), text)


@lru_cache(maxsize=None)
def d0_database() -> Database:
    text = D0_SCRIPT.read_text(encoding="utf-8").split(OBJECTS_MARKER, 1)[1]
    return run(d0_schema(), text)


# Object model

def stored_objects(db: Database, class_name: str) -> Dict[int, Dict[str, Any]]:
    """Stored scalar and reference values of every object in the extent of ``class_name``."""
    objects: Dict[int, Dict[str, Any]] = {}
    for exact in extent_classes(db, class_name):
        if not db.has_relation(root_name(exact)):
            continue
        for row in db.relation(root_name(exact)).relation.dicts():
            oid = row.pop(OID)
            objects[oid] = row
    return objects


def stored_set(db: Database, class_name: str, member: str) -> Dict[int, List[Dict[str, Any]]]:
    rows: Dict[int, List[Dict[str, Any]]] = defaultdict(list)
    for exact in extent_classes(db, class_name):
        name = set_relation_name(exact, (member,))
        if not db.has_relation(name):
            continue
        for row in db.relation(name).relation.dicts():
            rows[row.pop(OID)].append(row)
    return rows


def turnover(db: Database, art: str) -> Set[Tuple[str, Optional[int], int]]:
    """(DocN, Cntr, Pieces) per document carrying ``art``."""
    docs = stored_objects(db, "DOCS")
    items = stored_set(db, "DOCS", "Items")
    totals: Dict[Tuple[str, Optional[int]], int] = defaultdict(int)
    for oid, doc in docs.items():
        for item in items.get(oid, []):
            if item["Art"] == art:
                totals[(doc["DocN"], doc["Cntr"])] += item["Pieces"]
    return {(doc_n, cntr, pieces) for (doc_n, cntr), pieces in totals.items()}


def pieces(db: Database, art: str) -> int:
    return sum(p for _, _, p in turnover(db, art))


def trading_names(db: Database, art: str) -> Set[str]:
    """Names of the contractors on documents carrying ``art``."""
    contractors = stored_objects(db, "CONTRACTORS")
    return {
        contractors[cntr]["Name"]
        for _, cntr, _ in turnover(db, art)
        if cntr is not None and contractors[cntr]["Name"] is not None
    }


# Per-object method interpreter

class _Returned(Exception):
    pass


def _truthy(value: Any) -> bool:
    return value is True


def _eval(expr, state: Dict[str, Any], variables: Dict[str, Any]) -> Any:
    if isinstance(expr, ast.Literal):
        return expr.value
    if isinstance(expr, ast.Path):
        name = expr.segments[0].name
        if expr.anchor == "bare" and name in variables:
            return variables[name]
        return state[name]
    if isinstance(expr, ast.IsNullTest):
        is_null = _eval(expr.operand, state, variables) is None
        return not is_null if expr.negated else is_null
    if isinstance(expr, ast.Unary):
        value = _eval(expr.operand, state, variables)
        if expr.op == "NOT":
            return not _truthy(value)
        return None if value is None else -value
    left = _eval(expr.left, state, variables)
    if expr.op == "AND":
        return _truthy(left) and _truthy(_eval(expr.right, state, variables))
    if expr.op == "OR":
        return _truthy(left) or _truthy(_eval(expr.right, state, variables))
    right = _eval(expr.right, state, variables)
    if left is None or right is None:
        return False if expr.op in ("=", "<>", "<", "<=", ">", ">=") else None
    return {
        "=": lambda: left == right,
        "<>": lambda: left != right,
        "<": lambda: left < right,
        "<=": lambda: left <= right,
        ">": lambda: left > right,
        ">=": lambda: left >= right,
        "+": lambda: left + right,
        "-": lambda: left - right,
        "*": lambda: left * right,
    }[expr.op]()


def _exec(statement, state: Dict[str, Any], variables: Dict[str, Any]) -> None:
    if isinstance(statement, ast.Block):
        for inner in statement.statements:
            _exec(inner, state, variables)
    elif isinstance(statement, ast.Declare):
        variables[statement.name] = None
    elif isinstance(statement, ast.Assign):
        name = statement.target.segments[0].name
        value = _eval(statement.value, state, variables)
        if statement.target.anchor == "bare" and name in variables:
            variables[name] = value
        else:
            state[name] = value
    elif isinstance(statement, ast.If):
        if _truthy(_eval(statement.condition, state, variables)):
            _exec(statement.then, state, variables)
        elif statement.otherwise is not None:
            _exec(statement.otherwise, state, variables)
    elif isinstance(statement, ast.Return):
        raise _Returned()


def run_for_object(body: ast.Block, state: Dict[str, Any], params: Dict[str, Any]) -> Dict[str, Any]:
    """Execute a loop-free body for one object; returns its new state."""
    state = dict(state)
    try:
        _exec(body, state, dict(params))
    except _Returned:
        pass
    return state


# Generators

NAMES = ("Ann", "Bob", "Cyd")
ARTS = ("A1", "A2", "A3")


@st.composite
def d0_worlds(draw) -> str:
    """At most 16 objects for the goods-and-documents schema, as a script."""
    names = draw(st.lists(st.sampled_from(NAMES), min_size=1, max_size=4))
    arts = ARTS[:draw(st.integers(1, len(ARTS)))]
    docs = draw(st.lists(
        st.tuples(
            st.one_of(st.none(), st.integers(0, len(names) - 1)),
            st.dictionaries(st.sampled_from(arts), st.integers(1, 9), max_size=len(arts)),
        ),
        max_size=9,
    ))
    lines = [f'NEW CONTRACTORS WITH SET .Name:="{name}", .ID:="C{i}";' for i, name in enumerate(names)]
    lines += [f'NEW GOODS WITH SET .Art:="{art}";' for art in arts]
    for n, (cntr, items) in enumerate(docs):
        inits = f'.DocN:="D{n}"'
        if cntr is not None:
            inits += f', .Cntr:=CONTRACTORS[.ID="C{cntr}"]'
        lines.append(f"NEW DOCS WITH SET {inits};")
        if items:
            values = ", ".join(f'("{art}", {count})' for art, count in sorted(items.items()))
            lines.append(f'INSERT INTO DOCS[.DocN="D{n}"].Items VALUES {values};')
    return "\n".join(lines)


CELLS_SCHEMA = """
CREATE CLASS CELLS (N INTEGER, M INTEGER, Tag STRING, Bump(k INTEGER));
ALTER CELLS REALIZE N, M, Tag AS STORED;
"""

INT_ATOMS = ("N", "M", "k", "t", "0", "1", "2", "5")


def _int_expr(draw, depth: int) -> str:
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(INT_ATOMS))
    op = draw(st.sampled_from(["+", "-"]))
    return f"({_int_expr(draw, depth - 1)} {op} {_int_expr(draw, depth - 1)})"


def _condition(draw, depth: int) -> str:
    choice = draw(st.integers(0, 5 if depth else 3))
    if choice == 0:
        op = draw(st.sampled_from(["=", "<>", "<", ">="]))
        return f"{_int_expr(draw, 1)} {op} {_int_expr(draw, 1)}"
    if choice == 1:
        return f"{draw(st.sampled_from(['N', 'M', 't', 'Tag']))} IS {draw(st.sampled_from(['', 'NOT ']))}NULL"
    if choice == 2:
        return f'Tag = "{draw(st.sampled_from(["x", "y"]))}"'
    if choice == 3:
        return f"k > {_int_expr(draw, 0)}"
    if choice == 4:
        return f"NOT ({_condition(draw, depth - 1)})"
    op = draw(st.sampled_from(["AND", "OR"]))
    return f"({_condition(draw, depth - 1)} {op} {_condition(draw, depth - 1)})"


def _statement(draw, depth: int) -> str:
    choice = draw(st.integers(0, 6 if depth else 4))
    if choice <= 2:
        target = draw(st.sampled_from(["N", "M", "t"]))
        return f"{target} := {_int_expr(draw, 2)};"
    if choice == 3:
        value = draw(st.sampled_from(['"x"', '"y"', 'Tag + "x"', "NULL"]))
        return f"Tag := {value};"
    if choice == 4:
        return "RETURN 0;"
    if choice == 5:
        inner = " ".join(_statement(draw, depth - 1) for _ in range(draw(st.integers(1, 3))))
        return f"BEGIN {inner} END"
    text = f"IF ({_condition(draw, 1)}) THEN {_statement(draw, depth - 1)}"
    if draw(st.booleans()):
        text += f" ELSE {_statement(draw, depth - 1)}"
    return text


@st.composite
def method_bodies(draw) -> str:
    """A loop-free body for CELLS.Bump that touches only the receiving object."""
    statements = [_statement(draw, 2) for _ in range(draw(st.integers(1, 5)))]
    return "BEGIN DECLARE t INTEGER; " + " ".join(statements) + " END"


@st.composite
def cells(draw) -> List[Dict[str, Any]]:
    values = st.one_of(st.none(), st.integers(0, 9))
    return draw(st.lists(
        st.fixed_dictionaries({"N": values, "M": values, "Tag": st.sampled_from([None, "x", "y"])}),
        min_size=1,
        max_size=16,
    ))


def cells_script(objects: List[Dict[str, Any]]) -> str:
    lines = []
    for obj in objects:
        inits = []
        for name in ("N", "M"):
            if obj[name] is not None:
                inits.append(f".{name}:={obj[name]}")
        if obj["Tag"] is not None:
            inits.append(f'.Tag:="{obj["Tag"]}"')
        lines.append("NEW CELLS" + (" WITH SET " + ", ".join(inits) if inits else "") + ";")
    return "\n".join(lines)
