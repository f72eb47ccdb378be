"""Typing and compilation of scalar expressions against a row header.

The engine resolves paths, sub-selects and aggregates to columns (or
constants) beforehand and hands them in as slots; this module only deals
with the operators.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, Optional, Tuple

from errors import AggregateMisuse, KindMismatch
from kernel.predicates import compare
from kernel.relation import Header, Row
from kernel.values import BOOLEAN, DATETIME, FLOAT, INTEGER, STRING, BaseKind, Kind, coerce
from language import ast
from language.printer import format_path

Evaluator = Callable[[Row], Any]

LITERAL_KINDS = {
    "STRING": STRING,
    "INTEGER": INTEGER,
    "FLOAT": FLOAT,
    "DATETIME": DATETIME,
    "BOOLEAN": BOOLEAN,
}


@dataclass(frozen=True)
class Slot:
    """A resolved leaf: a column of the row, or a constant when ``column`` is None."""
    column: Optional[str]
    kind: Optional[Kind]
    value: Any = None


def walk(expr) -> Iterator[Any]:
    """Pre-order traversal; does not descend into sub-selects or segment predicates."""
    yield expr
    if isinstance(expr, ast.Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, ast.Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, ast.IsNullTest):
        yield from walk(expr.operand)
    elif isinstance(expr, ast.Aggregate) and expr.arg is not None:
        yield from walk(expr.arg)


def contains_aggregate(expr) -> bool:
    return any(isinstance(node, ast.Aggregate) for node in walk(expr))


def truthy(value: Any) -> bool:
    return value is True


def compile_expr(expr, header: Header, slots: Dict[Any, Slot]) -> Tuple[Evaluator, Optional[Kind]]:
    """Compile ``expr`` into a function of a row of ``header`` plus its static kind.

    A kind of None means the expression is the bare NULL literal.
    """
    slot = slots.get(expr)
    if slot is not None:
        if slot.column is None:
            value = slot.value
            return (lambda row: value), slot.kind
        position = header.index(slot.column)
        return (lambda row: row[position]), slot.kind
    if isinstance(expr, ast.Literal):
        if expr.kind == "NULL":
            return (lambda row: None), None
        kind = LITERAL_KINDS[expr.kind]
        value = coerce(kind, expr.value)
        return (lambda row: value), kind
    if isinstance(expr, ast.Unary):
        return _compile_unary(expr, header, slots)
    if isinstance(expr, ast.Binary):
        return _compile_binary(expr, header, slots)
    if isinstance(expr, ast.IsNullTest):
        operand, _ = compile_expr(expr.operand, header, slots)
        if expr.negated:
            return (lambda row: operand(row) is not None), BOOLEAN
        return (lambda row: operand(row) is None), BOOLEAN
    if isinstance(expr, ast.Aggregate):
        raise AggregateMisuse(f"aggregate {expr.fn} is not allowed here")
    if isinstance(expr, ast.Path):
        raise AggregateMisuse(f"{format_path(expr)} must appear in GROUP BY or inside an aggregate")
    if isinstance(expr, ast.NewExpr):
        raise KindMismatch("NEW is only allowed as an initializer value")
    raise KindMismatch(f"unsupported expression {type(expr).__name__}")


def _compile_unary(expr: ast.Unary, header: Header, slots: Dict[Any, Slot]) -> Tuple[Evaluator, Optional[Kind]]:
    operand, kind = compile_expr(expr.operand, header, slots)
    if expr.op == "NOT":
        _expect_boolean(kind, "NOT")
        return (lambda row: not truthy(operand(row))), BOOLEAN
    if kind is not None and not kind.is_numeric:
        raise KindMismatch(f"unary minus over {kind}")

    def negate(row: Row) -> Any:
        value = operand(row)
        return None if value is None else -value

    return negate, kind


def _expect_boolean(kind: Optional[Kind], op: str) -> None:
    if kind is not None and kind.base is not BaseKind.BOOLEAN:
        raise KindMismatch(f"{op} needs BOOLEAN operands, got {kind}")


def _compile_binary(expr: ast.Binary, header: Header, slots: Dict[Any, Slot]) -> Tuple[Evaluator, Optional[Kind]]:
    left, lk = compile_expr(expr.left, header, slots)
    right, rk = compile_expr(expr.right, header, slots)
    op = expr.op
    if op in ("AND", "OR"):
        _expect_boolean(lk, op)
        _expect_boolean(rk, op)
        if op == "AND":
            return (lambda row: truthy(left(row)) and truthy(right(row))), BOOLEAN
        return (lambda row: truthy(left(row)) or truthy(right(row))), BOOLEAN
    if op in ("=", "<>", "<", "<=", ">", ">="):
        left, lk, right, rk = _align_datetime(expr, left, lk, right, rk)
        if lk is not None and rk is not None and not lk.comparable(rk):
            raise KindMismatch(f"cannot compare {lk} {op} {rk}")
        return (lambda row: compare(op, left(row), right(row))), BOOLEAN
    kind = _arithmetic_kind(op, lk, rk)

    def apply(row: Row) -> Any:
        a, b = left(row), right(row)
        if a is None or b is None:
            return None
        if op == "+":
            result = a + b
        elif op == "-":
            result = a - b
        elif op == "*":
            result = a * b
        else:
            if b == 0:
                return None
            result = a / b
        return coerce(kind, result) if kind is not None else result

    return apply, kind


def _arithmetic_kind(op: str, lk: Optional[Kind], rk: Optional[Kind]) -> Optional[Kind]:
    known = [k for k in (lk, rk) if k is not None]
    if not known:
        return None
    if op == "+" and all(k.base is BaseKind.STRING for k in known):
        return STRING
    if not all(k.is_numeric for k in known):
        raise KindMismatch(f"operator {op} over {' and '.join(str(k) for k in known)}")
    if op == "/" or any(k.base is BaseKind.FLOAT for k in known):
        return FLOAT
    return INTEGER


def _align_datetime(expr, left, lk, right, rk):
    """Let a string literal stand for a timestamp when compared with a DATETIME."""
    if lk == DATETIME and rk == STRING and isinstance(expr.right, ast.Literal):
        value = coerce(DATETIME, expr.right.value)
        return left, lk, (lambda row: value), DATETIME
    if rk == DATETIME and lk == STRING and isinstance(expr.left, ast.Literal):
        value = coerce(DATETIME, expr.left.value)
        return (lambda row: value), DATETIME, right, rk
    return left, lk, right, rk


def constant_value(expr, slots: Optional[Dict[Any, Slot]] = None) -> Tuple[Any, Optional[Kind]]:
    """Evaluate an expression that needs no row."""
    fn, kind = compile_expr(expr, Header.of(("~", BOOLEAN)), slots or {})
    return fn((None,)), kind


def fit(kind: Kind, value: Any, where: str) -> Any:
    """Coerce an expression result into a declared kind."""
    try:
        return coerce(kind, value)
    except KindMismatch:
        raise KindMismatch(f"{where}: value {value!r} is not of kind {kind}") from None
