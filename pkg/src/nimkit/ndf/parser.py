"""Recursive-descent parser for the NDF schema language.

Grammar::

    file     := [ "package" qname ";" ] { typedef | mapping }
    typedef  := IDENT "{" { member } "}"
    member   := fielddef | typedef
    fielddef := ("String" | "Number" | "Boolean" | "Timestamp") IDENT ";"
    mapping  := qfield ":=" qfield { "|" qfield } ";"
    qfield   := qname "." IDENT
    qname    := IDENT { "." IDENT }

Parsing never raises: ``parse`` always returns a ``ParseResult`` whose
``diagnostics`` carry any lexical, encoding or syntax error with a
1-based line/column. On the first error the parse stops and ``model``
is ``None``. Semantic rules (name uniqueness, mapping well-formedness
across models) are not enforced here; see ``checker``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    KEYWORD_KINDS,
    RESERVED_WORDS,
    Diagnostic,
    FieldDef,
    MappingRule,
    NdfModel,
    SourceRef,
    TypeDef,
)
from .lexer import LexError, Token, TokenType, tokenize


@dataclass
class ParseResult:
    model: NdfModel | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )


class _SyntaxError(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.message = message
        self.token = token


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    # -- token plumbing ------------------------------------------------

    def _peek(self, offset: int = 0) -> Token:
        idx = min(self._pos + offset, len(self._tokens) - 1)
        return self._tokens[idx]

    def _advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.type is not TokenType.EOF:
            self._pos += 1
        return tok

    def _expect(self, ttype: TokenType) -> Token:
        tok = self._peek()
        if tok.type is not ttype:
            raise _SyntaxError(f"expected {ttype.value}, found {self._describe(tok)}", tok)
        return self._advance()

    def _expect_name(self, role: str) -> Token:
        tok = self._expect(TokenType.IDENT)
        if tok.value in RESERVED_WORDS:
            raise _SyntaxError(
                f"reserved word '{tok.value}' cannot be used as a {role}", tok
            )
        return tok

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.type is TokenType.EOF:
            return "end of input"
        return f"'{tok.value}'"

    # -- grammar productions --------------------------------------------

    def parse_file(self) -> NdfModel:
        package = ""
        if self._peek().type is TokenType.IDENT and self._peek().value == "package":
            self._advance()
            package = self._qname_text()
            self._expect(TokenType.SEMI)

        types: list[TypeDef] = []
        mappings: list[MappingRule] = []
        while self._peek().type is not TokenType.EOF:
            tok = self._peek()
            if tok.type is not TokenType.IDENT:
                raise _SyntaxError(
                    f"expected a type or mapping declaration, found {self._describe(tok)}",
                    tok,
                )
            follow = self._peek(1).type
            if follow is TokenType.LBRACE:
                types.append(self._typedef(package))
            elif follow is TokenType.DOT:
                mappings.append(self._mapping())
            else:
                raise _SyntaxError(
                    f"expected '{{' or '.' after '{tok.value}'", self._peek(1)
                )
        return NdfModel(package=package, types=tuple(types), mappings=tuple(mappings))

    def _typedef(self, prefix: str) -> TypeDef:
        name_tok = self._expect_name("type name")
        qualified = f"{prefix}.{name_tok.value}" if prefix else name_tok.value
        self._expect(TokenType.LBRACE)
        fields: list[FieldDef] = []
        nested: list[TypeDef] = []
        while self._peek().type is not TokenType.RBRACE:
            tok = self._peek()
            if tok.type is not TokenType.IDENT:
                raise _SyntaxError(
                    f"expected a field or nested type, found {self._describe(tok)}", tok
                )
            if tok.value in KEYWORD_KINDS:
                kind_tok = self._advance()
                field_tok = self._expect_name("field name")
                self._expect(TokenType.SEMI)
                fields.append(
                    FieldDef(
                        name=field_tok.value,
                        kind=KEYWORD_KINDS[kind_tok.value],
                        line=kind_tok.line,
                        column=kind_tok.column,
                    )
                )
            else:
                nested.append(self._typedef(qualified))
        self._expect(TokenType.RBRACE)
        return TypeDef(
            name=name_tok.value,
            fields=tuple(fields),
            nested=tuple(nested),
            qualified_name=qualified,
            line=name_tok.line,
            column=name_tok.column,
        )

    def _mapping(self) -> MappingRule:
        first = self._peek()
        target_type, target_field = self._qfield("mapping target")
        self._expect(TokenType.ASSIGN)
        sources = [self._source_ref()]
        while self._peek().type is TokenType.PIPE:
            self._advance()
            sources.append(self._source_ref())
        self._expect(TokenType.SEMI)
        return MappingRule(
            target_type=target_type,
            target_field=target_field,
            sources=tuple(sources),
            line=first.line,
            column=first.column,
        )

    def _source_ref(self) -> SourceRef:
        first = self._peek()
        type_name, field_name = self._qfield("mapping source")
        return SourceRef(
            type_name=type_name,
            field_name=field_name,
            line=first.line,
            column=first.column,
        )

    def _qfield(self, role: str) -> tuple[str, str]:
        parts = self._qname_parts()
        if len(parts) < 2:
            raise _SyntaxError(
                f"{role} must name a type and a field, e.g. 'Type.field'",
                self._peek(),
            )
        return ".".join(parts[:-1]), parts[-1]

    def _qname_parts(self) -> list[str]:
        parts = [self._expect_name("name").value]
        while self._peek().type is TokenType.DOT:
            self._advance()
            parts.append(self._expect_name("name").value)
        return parts

    def _qname_text(self) -> str:
        return ".".join(self._qname_parts())


def parse(source: str) -> ParseResult:
    """Parse NDF text into a model, reporting problems as diagnostics."""
    try:
        tokens = tokenize(source)
    except LexError as exc:
        return ParseResult(
            None,
            [Diagnostic("error", "lex", exc.message, exc.line, exc.column)],
        )
    try:
        model = _Parser(tokens).parse_file()
    except _SyntaxError as exc:
        return ParseResult(
            None,
            [
                Diagnostic(
                    "error", "syntax", exc.message, exc.token.line, exc.token.column
                )
            ],
        )
    return ParseResult(
        NdfModel(
            package=model.package,
            types=model.types,
            mappings=model.mappings,
            source_text=source,
        ),
        [],
    )


def parse_bytes(data: bytes) -> ParseResult:
    """Parse raw bytes, reporting invalid UTF-8 as a positioned diagnostic."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = data[: exc.start]
        line = prefix.count(b"\n") + 1
        column = exc.start - (prefix.rfind(b"\n") + 1) + 1
        return ParseResult(
            None,
            [
                Diagnostic(
                    "error",
                    "encoding",
                    f"invalid UTF-8 at byte {exc.start}: {exc.reason}",
                    line,
                    column,
                )
            ],
        )
    return parse(text)
