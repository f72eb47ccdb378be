"""Canonical single-line rendering of statements.

``parse_statement(format_statement(s)) == s`` for every parsed statement;
the snapshot catalog section is written with this printer.
"""

from typing import Iterable

from language import ast
from kernel.values import format_datetime

STRING_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _quote(text: str) -> str:
    return '"' + "".join(STRING_ESCAPES.get(c, c) for c in text) + '"'


def _join(parts: Iterable[str]) -> str:
    return ", ".join(parts)


def format_literal(node: ast.Literal) -> str:
    if node.kind == "NULL":
        return "NULL"
    if node.kind == "BOOLEAN":
        return "TRUE" if node.value else "FALSE"
    if node.kind == "STRING":
        return _quote(node.value)
    if node.kind == "DATETIME":
        return f"'{format_datetime(node.value)}'"
    return repr(node.value)


def format_path(path: ast.Path) -> str:
    parts = []
    for index, segment in enumerate(path.segments):
        text = segment.name
        if segment.predicate is not None:
            text += f"[{format_expr(segment.predicate)}]"
        if index > 0 or path.anchor != "bare":
            text = "." + text
        parts.append(text)
    return (path.alias or "") + "".join(parts)


def format_expr(node: ast.Expr) -> str:
    if isinstance(node, ast.Literal):
        return format_literal(node)
    if isinstance(node, ast.Path):
        return format_path(node)
    if isinstance(node, ast.Binary):
        return f"({format_expr(node.left)} {node.op} {format_expr(node.right)})"
    if isinstance(node, ast.Unary):
        if node.op == "NOT":
            return f"(NOT {format_expr(node.operand)})"
        return f"(-{format_expr(node.operand)})"
    if isinstance(node, ast.IsNullTest):
        test = "IS NOT NULL" if node.negated else "IS NULL"
        return f"({format_expr(node.operand)} {test})"
    if isinstance(node, ast.Aggregate):
        return f"{node.fn}({'*' if node.arg is None else format_expr(node.arg)})"
    if isinstance(node, ast.NewExpr):
        return f"({format_new(node)})"
    if isinstance(node, ast.SubSelect):
        return f"({format_select(node.select)})"
    raise TypeError(f"not an expression: {node!r}")


def format_init(node: ast.Init) -> str:
    return f"{format_path(node.target)} := {format_expr(node.value)}"


def format_new(node: ast.NewExpr) -> str:
    text = f"NEW {node.class_name}"
    if node.inits:
        text += " WITH SET " + _join(format_init(i) for i in node.inits)
    return text


def format_select(node: ast.Select) -> str:
    if node.star:
        items = "*"
    else:
        items = _join(
            format_expr(i.expr) + (f" AS {i.alias}" if i.alias else "") for i in node.items
        )
    text = f"SELECT {items} FROM {format_path(node.source)}"
    if node.alias:
        text += f" {node.alias}"
    if node.where is not None:
        text += f" WHERE {format_expr(node.where)}"
    if node.group_by:
        text += " GROUP BY " + _join(format_expr(g) for g in node.group_by)
    return text


def format_type(node: ast.TypeRef) -> str:
    return node.name


def format_member(node: ast.Member) -> str:
    if isinstance(node, ast.AttrDecl):
        return f"{node.name} {format_type(node.type)}"
    if isinstance(node, ast.SetMember):
        text = f"{node.name} SET OF ({_join(format_member(m) for m in node.members)})"
        if node.key:
            text += f" KEY({_join(node.key)})"
        return text
    text = f"{node.name}({format_params(node.params)})"
    if node.returns is not None:
        text += f" RETURNS {format_type(node.returns)}"
    return text


def format_params(params) -> str:
    return _join(f"{p.name} {format_type(p.type)}" for p in params)


def format_proc(node: ast.ProcStatement) -> str:
    if isinstance(node, ast.Block):
        inner = " ".join(format_proc(s) for s in node.statements)
        return f"BEGIN {inner} END" if inner else "BEGIN END"
    if isinstance(node, ast.Declare):
        return f"DECLARE {node.name} {format_type(node.type)};"
    if isinstance(node, ast.Assign):
        return f"{format_path(node.target)} := {format_expr(node.value)};"
    if isinstance(node, ast.Return):
        return f"RETURN {format_expr(node.value)};"
    text = f"IF {format_expr(node.condition)} THEN {format_proc(node.then)}"
    if node.otherwise is not None:
        text += f" ELSE {format_proc(node.otherwise)}"
    return text


def format_statement(node: ast.Statement) -> str:
    if isinstance(node, ast.CreateClass):
        text = f"CREATE CLASS {node.name}"
        if node.parents:
            text += f" EXTEND {_join(node.parents)}"
        text += f" ({_join(format_member(m) for m in node.members)})"
        if node.key:
            text += f" KEY({_join(node.key)})"
        for ref in node.references:
            text += (
                f" REFERENCE {'.'.join(ref.component)}({_join('.' + a for a in ref.attrs)})"
                f" ON {ref.target}({_join('.' + a for a in ref.target_attrs)})"
            )
        return text + ";"
    if isinstance(node, ast.AlterRealize):
        targets = _join(node.targets)
        if node.params is not None:
            targets += f"({format_params(node.params)})"
        text = f"ALTER {node.class_name} REALIZE {targets} AS "
        if isinstance(node.body, ast.StoredBody):
            return text + "STORED;"
        if isinstance(node.body, ast.QueryBody):
            return text + format_select(node.body.select) + ";"
        return text + format_proc(node.body.block) + ";"
    if isinstance(node, ast.New):
        return format_new(node.expr) + ";"
    if isinstance(node, ast.Destroy):
        return f"DESTROY {format_path(node.target)};"
    if isinstance(node, ast.Select):
        return format_select(node) + ";"
    if isinstance(node, ast.Exec):
        call = node.call
        return f"EXEC {format_path(call.target)}.{call.method}({_join(format_expr(a) for a in call.args)});"
    if isinstance(node, ast.Insert):
        text = f"INSERT INTO {format_path(node.target)}"
        if node.columns:
            text += f" ({_join('.' + c for c in node.columns)})"
        rows = _join("(" + _join(format_expr(v) for v in row) + ")" for row in node.rows)
        return f"{text} VALUES {rows};"
    if isinstance(node, ast.Delete):
        text = f"DELETE FROM {format_path(node.target)}"
        if node.where is not None:
            text += f" WHERE {format_expr(node.where)}"
        return text + ";"
    if isinstance(node, ast.Update):
        return f"UPDATE {format_path(node.target)} SET {_join(format_init(a) for a in node.assignments)};"
    raise TypeError(f"not a statement: {node!r}")
