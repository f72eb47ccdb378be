"""Rendering of relations for the shell."""

from typing import Sequence

from tabulate import tabulate

from kernel.relation import Relation, sorted_rows
from kernel.values import render
from store.snapshot import encode_value, escape

FORMATS = ("table", "tsv")


def row_count(n: int) -> str:
    return "1 row" if n == 1 else f"{n} rows"


def format_relation(rel: Relation, mode: str = "table") -> str:
    """Rows in canonical order, as an aligned table or as tab-separated text."""
    rows = sorted_rows(rel)
    names = list(rel.header.names)
    if mode == "tsv":
        lines = ["\t".join(escape(name) for name in names)]
        lines += ["\t".join(encode_value(a.kind, v) for a, v in zip(rel.header, row)) for row in rows]
        return "\n".join(lines)
    if mode != "table":
        raise ValueError(f"unknown output format {mode!r}; expected one of {', '.join(FORMATS)}")
    table = tabulate(
        [[render(v) for v in row] for row in rows],
        headers=names,
        tablefmt="simple",
        disable_numparse=True,
    )
    return f"{table}\n{row_count(len(rows))}"


def format_listing(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Plain table for meta-command output."""
    return tabulate([list(r) for r in rows], headers=list(headers), tablefmt="simple", disable_numparse=True)
