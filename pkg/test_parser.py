"""Lexer, parser and printer."""

import pytest
from hypothesis import given, strategies as st

from errors import LexError, ParseError
from language import ast
from language.lexer import TokenKind, tokenize, untokenize
from language.parser import is_complete, iter_statements, parse_expression, parse_path, parse_script, parse_statement
from language.printer import format_expr, format_statement
from oracle import D0_SCRIPT, SCRIPTS


def test_new_statement_tokens():
    """`:=` is a single token and the dot before `Name` is its own token: 9 in all."""
    tokens = tokenize('NEW BANKS WITH SET .Name:="TheBank";')
    assert len(tokens) == 9
    assert [t.kind for t in tokens[3:6]] == [TokenKind.KEYWORD, TokenKind.PATH_DOT, TokenKind.IDENTIFIER]
    assert tokens[7].value == "TheBank"


def test_keywords_are_case_insensitive_and_aliases_are_tokens():
    tokens = tokenize("select #g.DocN from DOCS #g")
    assert tokens[0].is_keyword("SELECT")
    assert tokens[1].kind is TokenKind.ALIAS and tokens[1].text == "#g"


def test_quoted_timestamp_is_a_datetime_literal():
    token = tokenize("'2024-01-05T00:00:00Z'")[0]
    assert token.kind is TokenKind.DATETIME
    assert tokenize('"2024-01-05T00:00:00Z"')[0].kind is TokenKind.STRING


@given(st.text(alphabet='abc .;:=()"#\n/', max_size=30))
def test_untokenize_reproduces_the_source(source):
    try:
        tokens = tokenize(source)
    except LexError:
        return
    if tokens:
        assert untokenize(tokens) == source


def test_lex_errors_carry_positions():
    with pytest.raises(LexError) as info:
        tokenize('SELECT .Name\nFROM BANKS[.Name = "open')
    assert info.value.position == (2, 20)
    with pytest.raises(LexError):
        tokenize("SELECT ? FROM BANKS;")
    with pytest.raises(LexError):
        tokenize("SELECT .Name FROM GOODS[.Price > 1e999];")


def test_create_class_with_key_and_reference():
    classes = {s.name: s for s in parse_script(D0_SCRIPT.read_text()) if isinstance(s, ast.CreateClass)}
    node = classes["DOCS"]
    assert node.key == ("DocN",)
    assert [m.name for m in node.members] == ["DocN", "Date", "Comment", "Cntr", "Items", "DoShip"]
    items = node.members[4]
    assert isinstance(items, ast.SetMember) and items.key == ("Art",)
    assert node.references[0] == ast.ReferenceClause(("Items",), ("Art",), "GOODS", ("Art",))


def test_semicolons_separate_members_too():
    node = parse_statement("CREATE CLASS GOODS (Art STRING; Pieces INTEGER) KEY(Art);")
    assert [m.name for m in node.members] == ["Art", "Pieces"]


def test_path_with_selections():
    path = parse_path('DOCS[.DocN="D1"].Items')
    assert path.anchor == "bare"
    assert path.names == ("DOCS", "Items")
    assert path.segments[0].predicate == ast.Binary("=", parse_path(".DocN"), ast.Literal("D1", "STRING"))


def test_expression_precedence():
    expr = parse_expression("a + b * 2 > 3 AND NOT c IS NULL")
    assert format_expr(expr) == "(((a + (b * 2)) > 3) AND (NOT (c IS NULL)))"


def test_exec_needs_a_method_call():
    call = parse_statement("EXEC DOCS[.Date IS NULL].DoShip('2024-01-02T00:00:00Z');").call
    assert call.method == "DoShip"
    assert call.target.names == ("DOCS",)
    with pytest.raises(ParseError):
        parse_statement("EXEC DoShip();")


def test_loops_are_rejected():
    with pytest.raises(ParseError) as info:
        parse_statement("ALTER DOCS REALIZE DoShip(inDate DATETIME) AS BEGIN WHILE Date IS NULL END")
    assert "loops" in info.value.message


def test_parse_error_names_the_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse_statement("SELECT .Name BANKS;")
    assert info.value.position == (1, 14)
    assert "FROM" in info.value.expected


@pytest.mark.parametrize("script", ["d0_fixture.rxo", "goods_scenario.rxo"])
def test_printed_statements_parse_back_to_the_same_tree(script):
    for statement in parse_script((SCRIPTS / script).read_text()):
        assert parse_statement(format_statement(statement)) == statement


def test_iter_statements_is_lazy():
    statements = iter_statements("NEW BANKS; SELECT FROM;")
    assert isinstance(next(statements), ast.New)
    with pytest.raises(ParseError):
        next(statements)


def test_is_complete():
    assert is_complete("SELECT .Name FROM BANKS;")
    assert not is_complete("SELECT .Name FROM BANKS")
    assert not is_complete("ALTER DOCS REALIZE DoShip(inDate DATETIME) AS BEGIN Date := inDate;")
    assert is_complete("ALTER DOCS REALIZE DoShip(inDate DATETIME) AS BEGIN Date := inDate; END;")
    assert not is_complete('NEW BANKS WITH SET .Name := "a; b')
