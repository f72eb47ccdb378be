# Source language package
from language.lexer import Token, TokenKind, tokenize, untokenize
from language.parser import parse_expression, parse_path, parse_script, parse_statement, is_complete, iter_statements
from language.printer import format_expr, format_path, format_statement
