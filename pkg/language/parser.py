"""Recursive-descent parser for RxO statements.

The grammar is LL: the first keyword of a statement decides its form.
``:=`` assigns and ``=`` compares.
"""

import logging
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

from errors import LexError, ParseError
from language import ast
from language.lexer import Token, TokenKind, tokenize
from kernel.values import SCALAR_KINDS

logger = logging.getLogger(__name__)

AGGREGATE_NAMES = ("SUM", "COUNT", "MIN", "MAX", "AVG")
COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")
STATEMENT_KEYWORDS = ("CREATE", "ALTER", "NEW", "DESTROY", "SELECT", "EXEC", "INSERT", "DELETE", "UPDATE")
LOOP_KEYWORDS = ("WHILE", "FOR", "LOOP")


class Parser:
    """Parses a token list into statements."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.index = 0

    # Token helpers

    @property
    def current(self) -> Optional[Token]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _peek(self, offset: int = 1) -> Optional[Token]:
        index = self.index + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.index >= len(self.tokens)

    def _position(self):
        token = self.current
        if token is not None:
            return token.position
        if self.tokens:
            last = self.tokens[-1]
            return (last.line, last.column + len(last.text))
        return (1, 1)

    def _error(self, expected: Sequence[str]) -> ParseError:
        token = self.current
        found = "end of input" if token is None else token.describe()
        wanted = " or ".join(sorted(set(expected)))
        return ParseError(f"expected {wanted}, found {found}", self._position(), expected)

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _check_keyword(self, *words: str) -> bool:
        return self.current is not None and self.current.is_keyword(*words)

    def _check_punct(self, *marks: str) -> bool:
        return self.current is not None and self.current.is_punct(*marks)

    def _check(self, kind: TokenKind) -> bool:
        return self.current is not None and self.current.kind is kind

    def _accept_keyword(self, word: str) -> bool:
        if self._check_keyword(word):
            self.index += 1
            return True
        return False

    def _accept_punct(self, mark: str) -> bool:
        if self._check_punct(mark):
            self.index += 1
            return True
        return False

    def _keyword(self, word: str) -> Token:
        if not self._check_keyword(word):
            raise self._error([word])
        return self._advance()

    def _punct(self, mark: str) -> Token:
        if not self._check_punct(mark):
            raise self._error([repr(mark)])
        return self._advance()

    def _identifier(self) -> Token:
        if not self._check(TokenKind.IDENTIFIER):
            if self._check_keyword(*LOOP_KEYWORDS):
                raise ParseError(f"loops are not supported ({self.current.value})", self._position(), ["identifier"])
            raise self._error(["identifier"])
        return self._advance()

    def _separated(self, item: Callable, separator: str = ",") -> List:
        items = [item()]
        while self._accept_punct(separator):
            items.append(item())
        return items

    # Statements

    def parse_script(self) -> List[ast.Statement]:
        statements = []
        while not self.at_end():
            if self._accept_punct(";"):
                continue
            statements.append(self.statement())
        return statements

    def parse_single(self) -> ast.Statement:
        statement = self.statement()
        if not self.at_end():
            raise self._error(["end of input"])
        return statement

    def statement(self) -> ast.Statement:
        token = self.current
        if token is None or token.kind is not TokenKind.KEYWORD:
            raise self._error(STATEMENT_KEYWORDS)
        word = token.value
        if word in LOOP_KEYWORDS:
            raise ParseError(f"loops are not supported ({word})", token.position, STATEMENT_KEYWORDS)
        if word == "CREATE":
            return self._create_class()
        if word == "ALTER":
            return self._alter_realize()
        if word == "NEW":
            expr = self._new_expr()
            self._punct(";")
            return ast.New(expr, pos=token.position)
        if word == "DESTROY":
            self._advance()
            target = self.path()
            self._punct(";")
            return ast.Destroy(target, pos=token.position)
        if word == "SELECT":
            select = self.select()
            self._punct(";")
            return select
        if word == "EXEC":
            self._advance()
            call = self._method_call()
            self._punct(";")
            return ast.Exec(call, pos=token.position)
        if word == "INSERT":
            return self._insert()
        if word == "DELETE":
            return self._delete()
        if word == "UPDATE":
            return self._update()
        raise self._error(STATEMENT_KEYWORDS)

    def _create_class(self) -> ast.CreateClass:
        start = self._keyword("CREATE").position
        self._keyword("CLASS")
        name = self._identifier().text
        parents: List[str] = []
        if self._accept_keyword("EXTEND"):
            parents = [t.text for t in self._separated(self._identifier)]
        members = self._member_list()
        key: Tuple[str, ...] = ()
        if self._check_keyword("KEY"):
            key = self._key()
        references = []
        while self._check_keyword("REFERENCE"):
            references.append(self._reference())
        self._punct(";")
        return ast.CreateClass(name, tuple(parents), members, key, tuple(references), pos=start)

    def _member_list(self) -> Tuple[ast.Member, ...]:
        self._punct("(")
        members = []
        if not self._check_punct(")"):
            members.append(self._member())
            while self._accept_punct(",") or self._accept_punct(";"):
                members.append(self._member())
        self._punct(")")
        return tuple(members)

    def _key(self) -> Tuple[str, ...]:
        self._keyword("KEY")
        self._punct("(")
        names = self._separated(self._attribute_name)
        self._punct(")")
        return tuple(names)

    def _attribute_name(self) -> str:
        # KEY(Art) and REFERENCE Items(.Art) both occur
        self._accept_path_dot()
        return self._identifier().text

    def _accept_path_dot(self) -> bool:
        if self._check(TokenKind.PATH_DOT):
            self.index += 1
            return True
        return False

    def _member(self) -> ast.Member:
        name_token = self._identifier()
        name, start = name_token.text, name_token.position
        if self._accept_keyword("SET"):
            self._keyword("OF")
            members = self._member_list()
            for member in members:
                if isinstance(member, ast.MethodDecl):
                    raise ParseError("methods cannot be declared inside SET OF", member.pos, ["component"])
            key: Tuple[str, ...] = ()
            if self._check_keyword("KEY"):
                key = self._key()
            return ast.SetMember(name, members, key, pos=start)
        if self._check_punct("("):
            params = self._params()
            returns = None
            if self._accept_keyword("RETURNS"):
                returns = self._type()
            return ast.MethodDecl(name, params, returns, pos=start)
        return ast.AttrDecl(name, self._type(), pos=start)

    def _params(self) -> Tuple[ast.Param, ...]:
        self._punct("(")
        params = []
        if not self._check_punct(")"):
            params = self._separated(self._param)
        self._punct(")")
        return tuple(params)

    def _param(self) -> ast.Param:
        token = self._identifier()
        return ast.Param(token.text, self._type(), pos=token.position)

    def _type(self) -> ast.TypeRef:
        token = self._identifier()
        name = token.text.upper() if token.text.upper() in SCALAR_KINDS else token.text
        return ast.TypeRef(name, pos=token.position)

    def _reference(self) -> ast.ReferenceClause:
        start = self._keyword("REFERENCE").position
        component = [self._identifier().text]
        while self._accept_path_dot():
            component.append(self._identifier().text)
        self._punct("(")
        attrs = self._separated(self._attribute_name)
        self._punct(")")
        self._keyword("ON")
        target = self._identifier().text
        self._punct("(")
        target_attrs = self._separated(self._attribute_name)
        self._punct(")")
        return ast.ReferenceClause(tuple(component), tuple(attrs), target, tuple(target_attrs), pos=start)

    def _alter_realize(self) -> ast.AlterRealize:
        start = self._keyword("ALTER").position
        class_name = self._identifier().text
        self._keyword("REALIZE")
        targets = [self._identifier().text]
        params = None
        if self._check_punct("("):
            params = self._params()
        else:
            while self._accept_punct(","):
                targets.append(self._identifier().text)
        self._keyword("AS")
        body_start = self._position()
        if self._accept_keyword("STORED"):
            body = ast.StoredBody(pos=body_start)
            self._punct(";")
        elif self._check_keyword("SELECT"):
            body = ast.QueryBody(self.select(), pos=body_start)
            self._punct(";")
        elif self._check_keyword("BEGIN"):
            body = ast.ProcedureBody(self._block(), pos=body_start)
            self._accept_punct(";")
        else:
            raise self._error(["STORED", "SELECT", "BEGIN"])
        return ast.AlterRealize(class_name, tuple(targets), body, params, pos=start)

    def _insert(self) -> ast.Insert:
        start = self._keyword("INSERT").position
        self._keyword("INTO")
        target = self.path()
        columns: List[str] = []
        if self._check_punct("("):
            self._advance()
            columns = self._separated(self._attribute_name)
            self._punct(")")
        self._keyword("VALUES")
        rows = self._separated(self._row)
        self._punct(";")
        return ast.Insert(target, tuple(rows), tuple(columns), pos=start)

    def _row(self) -> Tuple[ast.Expr, ...]:
        self._punct("(")
        values = self._separated(self.expression)
        self._punct(")")
        return tuple(values)

    def _delete(self) -> ast.Delete:
        start = self._keyword("DELETE").position
        self._keyword("FROM")
        target = self.path()
        where = None
        if self._accept_keyword("WHERE"):
            where = self.expression()
        self._punct(";")
        return ast.Delete(target, where, pos=start)

    def _update(self) -> ast.Update:
        start = self._keyword("UPDATE").position
        target = self.path()
        self._keyword("SET")
        assignments = self._separated(self._init)
        self._punct(";")
        return ast.Update(target, tuple(assignments), pos=start)

    def _init(self) -> ast.Init:
        start = self._position()
        if not self._check(TokenKind.PATH_DOT):
            raise self._error(["'.'"])
        target = self.path()
        self._punct(":=")
        return ast.Init(target, self.expression(), pos=start)

    def _new_expr(self) -> ast.NewExpr:
        start = self._keyword("NEW").position
        class_name = self._identifier().text
        inits: List[ast.Init] = []
        if self._accept_keyword("WITH"):
            self._keyword("SET")
            inits = self._separated(self._init)
        return ast.NewExpr(class_name, tuple(inits), pos=start)

    def _method_call(self) -> ast.MethodCall:
        start = self._position()
        target = self.path()
        if len(target.segments) < 2 or target.segments[-1].predicate is not None:
            raise ParseError("EXEC needs <objects>.<method>(<arguments>)", start, ["'.'"])
        self._punct("(")
        args: List[ast.Expr] = []
        if not self._check_punct(")"):
            args = self._separated(self.expression)
        self._punct(")")
        receiver = ast.Path(target.anchor, target.segments[:-1], target.alias, pos=target.pos)
        return ast.MethodCall(receiver, target.segments[-1].name, tuple(args), pos=start)

    # SELECT

    def select(self) -> ast.Select:
        start = self._keyword("SELECT").position
        items: List[ast.SelectItem] = []
        if not self._accept_punct("*"):
            items = self._separated(self._select_item)
        self._keyword("FROM")
        source = self.path()
        alias = None
        if self._check(TokenKind.ALIAS):
            alias = self._advance().text
        where = None
        if self._accept_keyword("WHERE"):
            where = self.expression()
        group_by: List[ast.Expr] = []
        if self._accept_keyword("GROUP"):
            self._keyword("BY")
            group_by = self._separated(self.expression)
        return ast.Select(tuple(items), source, alias, where, tuple(group_by), pos=start)

    def _select_item(self) -> ast.SelectItem:
        start = self._position()
        expr = self.expression()
        alias = None
        if self._accept_keyword("AS"):
            alias = self._identifier().text
        return ast.SelectItem(expr, alias, pos=start)

    # Procedure bodies

    def _block(self) -> ast.Block:
        start = self._keyword("BEGIN").position
        statements = []
        while not self._check_keyword("END"):
            if self.at_end():
                raise self._error(["END"])
            statements.append(self._proc_statement())
        self._keyword("END")
        return ast.Block(tuple(statements), pos=start)

    def _proc_statement(self) -> ast.ProcStatement:
        token = self.current
        if token.is_keyword(*LOOP_KEYWORDS):
            raise ParseError(f"loops are not supported ({token.value})", token.position, ["statement"])
        if token.is_keyword("BEGIN"):
            block = self._block()
            self._accept_punct(";")
            return block
        if token.is_keyword("DECLARE"):
            self._advance()
            name = self._identifier().text
            type_ref = self._type()
            self._punct(";")
            return ast.Declare(name, type_ref, pos=token.position)
        if token.is_keyword("IF"):
            self._advance()
            condition = self.expression()
            self._keyword("THEN")
            then = self._proc_statement()
            otherwise = None
            if self._accept_keyword("ELSE"):
                otherwise = self._proc_statement()
            return ast.If(condition, then, otherwise, pos=token.position)
        if token.is_keyword("RETURN"):
            self._advance()
            value = self.expression()
            self._punct(";")
            return ast.Return(value, pos=token.position)
        if token.kind in (TokenKind.IDENTIFIER, TokenKind.PATH_DOT):
            target = self.path()
            if target.has_predicates or len(target.segments) != 1 or target.segments[0].name == "#":
                raise ParseError("assignment target must be a single name", token.position, ["identifier"])
            self._punct(":=")
            value = self.expression()
            self._punct(";")
            return ast.Assign(target, value, pos=token.position)
        raise self._error(["BEGIN", "DECLARE", "IF", "RETURN", "identifier"])

    # Paths

    def path(self) -> ast.Path:
        token = self.current
        if token is None:
            raise self._error(["path"])
        segments: List[ast.Segment] = []
        alias = None
        if token.kind is TokenKind.PATH_DOT:
            anchor = "dot"
        elif token.kind is TokenKind.ALIAS:
            anchor = "alias"
            alias = self._advance().text
        elif token.kind is TokenKind.IDENTIFIER:
            anchor = "bare"
            segments.append(self._segment())
        else:
            raise self._error(["path"])
        while self._check(TokenKind.PATH_DOT):
            self._advance()
            segments.append(self._segment())
        if not segments and anchor != "alias":
            raise self._error(["identifier"])
        return ast.Path(anchor, tuple(segments), alias, pos=token.position)

    def _segment(self) -> ast.Segment:
        token = self.current
        if self._check(TokenKind.HASH):
            self._advance()
            return ast.Segment("#", pos=token.position)
        name = self._identifier().text
        predicate = None
        if self._accept_punct("["):
            predicate = self.expression()
            self._punct("]")
        return ast.Segment(name, predicate, pos=token.position)

    # Expressions

    def expression(self) -> ast.Expr:
        return self._or()

    def _or(self) -> ast.Expr:
        left = self._and()
        while self._check_keyword("OR"):
            token = self._advance()
            left = ast.Binary("OR", left, self._and(), pos=token.position)
        return left

    def _and(self) -> ast.Expr:
        left = self._not()
        while self._check_keyword("AND"):
            token = self._advance()
            left = ast.Binary("AND", left, self._not(), pos=token.position)
        return left

    def _not(self) -> ast.Expr:
        if self._check_keyword("NOT"):
            token = self._advance()
            return ast.Unary("NOT", self._not(), pos=token.position)
        return self._comparison()

    def _comparison(self) -> ast.Expr:
        left = self._additive()
        if self._check_punct(*COMPARISONS):
            token = self._advance()
            return ast.Binary(token.text, left, self._additive(), pos=token.position)
        if self._check_keyword("IS"):
            token = self._advance()
            negated = self._accept_keyword("NOT")
            self._keyword("NULL")
            return ast.IsNullTest(left, negated, pos=token.position)
        return left

    def _additive(self) -> ast.Expr:
        left = self._multiplicative()
        while self._check_punct("+", "-"):
            token = self._advance()
            left = ast.Binary(token.text, left, self._multiplicative(), pos=token.position)
        return left

    def _multiplicative(self) -> ast.Expr:
        left = self._unary()
        while self._check_punct("*", "/"):
            token = self._advance()
            left = ast.Binary(token.text, left, self._unary(), pos=token.position)
        return left

    def _unary(self) -> ast.Expr:
        if self._check_punct("-"):
            token = self._advance()
            return ast.Unary("-", self._unary(), pos=token.position)
        return self._primary()

    def _primary(self) -> ast.Expr:
        token = self.current
        if token is None:
            raise self._error(["expression"])
        kind = token.kind
        if kind in (TokenKind.STRING, TokenKind.INTEGER, TokenKind.FLOAT, TokenKind.DATETIME):
            self._advance()
            return ast.Literal(token.value, kind.name, pos=token.position)
        if token.is_keyword("NULL"):
            self._advance()
            return ast.Literal(None, "NULL", pos=token.position)
        if token.is_keyword("TRUE", "FALSE"):
            self._advance()
            return ast.Literal(token.value == "TRUE", "BOOLEAN", pos=token.position)
        if token.is_keyword("SELECT"):
            return ast.SubSelect(self.select(), pos=token.position)
        if token.is_keyword("NEW"):
            return self._new_expr()
        if token.is_punct("("):
            self._advance()
            inner = self.expression()
            self._punct(")")
            return inner
        if kind is TokenKind.IDENTIFIER and token.text.upper() in AGGREGATE_NAMES:
            following = self._peek()
            if following is not None and following.is_punct("("):
                return self._aggregate()
        if kind in (TokenKind.IDENTIFIER, TokenKind.PATH_DOT, TokenKind.ALIAS):
            return self.path()
        if token.is_keyword(*LOOP_KEYWORDS):
            raise ParseError(f"loops are not supported ({token.value})", token.position, ["expression"])
        raise self._error(["expression"])

    def _aggregate(self) -> ast.Aggregate:
        token = self._advance()
        self._punct("(")
        if self._accept_punct("*"):
            if token.text.upper() != "COUNT":
                raise ParseError(f"{token.text.upper()}(*) is not allowed", token.position, ["expression"])
            arg = None
        else:
            arg = self.expression()
        self._punct(")")
        return ast.Aggregate(token.text.upper(), arg, pos=token.position)


def parse_statement(tokens: Union[str, List[Token]]) -> ast.Statement:
    """Parse exactly one statement."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return Parser(tokens).parse_single()


def parse_script(source: str) -> List[ast.Statement]:
    """Parse a sequence of statements; stray ``;`` are skipped."""
    statements = Parser(tokenize(source)).parse_script()
    logger.debug(f"parsed {len(statements)} statements")
    return statements


def parse_path(text: str) -> ast.Path:
    parser = Parser(tokenize(text))
    path = parser.path()
    if not parser.at_end():
        raise parser._error(["end of input"])
    return path


def parse_expression(text: str) -> ast.Expr:
    parser = Parser(tokenize(text))
    expr = parser.expression()
    if not parser.at_end():
        raise parser._error(["end of input"])
    return expr


def iter_statements(source: str) -> Iterator[ast.Statement]:
    """Parse a script lazily; a syntax error surfaces only when its statement is reached."""
    parser = Parser(tokenize(source))
    while not parser.at_end():
        if parser._accept_punct(";"):
            continue
        yield parser.statement()


def is_complete(text: str) -> bool:
    """Whether ``text`` ends a statement: a final ``;`` outside any BEGIN ... END or brackets."""
    try:
        tokens = tokenize(text)
    except LexError:
        return text.rstrip().endswith(";")
    if not tokens or not tokens[-1].is_punct(";"):
        return False
    depth = 0
    for token in tokens:
        if token.is_keyword("BEGIN") or token.is_punct("(", "["):
            depth += 1
        elif token.is_keyword("END") or token.is_punct(")", "]"):
            depth -= 1
    return depth <= 0
