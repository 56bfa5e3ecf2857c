"""Tokenizer behaviour: token kinds, positions, comments, error cases."""

import pytest

from nimkit.ndf.lexer import LexError, TokenType, tokenize


def kinds(source):
    return [t.type for t in tokenize(source)]


def test_simple_declaration_tokens():
    tokens = tokenize("Room { String roomName; }")
    assert [t.type for t in tokens] == [
        TokenType.IDENT,
        TokenType.LBRACE,
        TokenType.IDENT,
        TokenType.IDENT,
        TokenType.SEMI,
        TokenType.RBRACE,
        TokenType.EOF,
    ]
    assert [t.value for t in tokens[:5]] == ["Room", "{", "String", "roomName", ";"]


def test_positions_are_one_based():
    tokens = tokenize("a\n  bc")
    assert (tokens[0].line, tokens[0].column) == (1, 1)
    assert (tokens[1].line, tokens[1].column) == (2, 3)


def test_mapping_punctuation():
    tokens = tokenize("A.x := B.y | C.z ;")
    assert kinds("A.x := B.y | C.z ;") == [
        TokenType.IDENT,
        TokenType.DOT,
        TokenType.IDENT,
        TokenType.ASSIGN,
        TokenType.IDENT,
        TokenType.DOT,
        TokenType.IDENT,
        TokenType.PIPE,
        TokenType.IDENT,
        TokenType.DOT,
        TokenType.IDENT,
        TokenType.SEMI,
        TokenType.EOF,
    ]
    assert tokens[3].value == ":="


def test_comments_run_to_end_of_line():
    tokens = tokenize("a // b c d\ne")
    assert [t.value for t in tokens if t.type is TokenType.IDENT] == ["a", "e"]


def test_comment_at_end_of_input():
    assert kinds("// just a comment") == [TokenType.EOF]


def test_identifier_charset():
    tokens = tokenize("_x9 Y_2z")
    assert [t.value for t in tokens[:2]] == ["_x9", "Y_2z"]


def test_empty_input_yields_eof_only():
    assert kinds("") == [TokenType.EOF]


def test_unexpected_character_reports_position():
    with pytest.raises(LexError) as err:
        tokenize("a {\n  $\n}")
    assert err.value.line == 2
    assert err.value.column == 3


def test_bare_colon_is_an_error():
    with pytest.raises(LexError):
        tokenize("A.x : B.y;")


def test_lone_slash_is_an_error():
    with pytest.raises(LexError):
        tokenize("a / b")


def test_digit_cannot_start_a_token():
    with pytest.raises(LexError):
        tokenize("9abc")
