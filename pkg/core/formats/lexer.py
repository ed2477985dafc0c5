"""
Tokenizer shared by the card, operation and scenario grammars.
"""

import re
from dataclasses import dataclass
from typing import List, Optional

from core.exceptions import ParseError

IDENT = "ident"
INT = "int"
OP = "op"
EOF = "eof"

_OPERATORS = (
    "<=>", ":=", "==", "!=", "<=", ">=", "=>", "->", "&&", "||",
    "{", "}", "(", ")", "[", "]", ";", ":", ",", ".", "=", "<", ">", "+", "-", "*", "!", "|",
)
_TOKEN = re.compile(
    r"(?P<space>[ \t\r]+)"
    r"|(?P<newline>\n)"
    r"|(?P<comment>(?:#|//)[^\n]*)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*[?']?)"
    r"|(?P<op>" + "|".join(re.escape(op) for op in _OPERATORS) + r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    def __str__(self) -> str:
        return "end of input" if self.kind == EOF else repr(self.text)


def tokenize(text: str, source: Optional[str] = None) -> List[Token]:
    tokens = []
    line, line_start, position = 1, 0, 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(
                f"unexpected character {text[position]!r}",
                source=source,
                line=line,
                column=position - line_start + 1,
            )
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind in (IDENT, INT, OP):
            tokens.append(Token(kind, match.group(), line, position - line_start + 1))
        position = match.end()
    tokens.append(Token(EOF, "", line, position - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over tokens with ParseError reporting at the current position"""

    def __init__(self, text: str, source: Optional[str] = None):
        self.source = source
        self.tokens = tokenize(text, source)
        self.position = 0

    def peek(self, offset: int = 0) -> Token:
        index = min(self.position + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def next(self) -> Token:
        token = self.peek()
        if token.kind != EOF:
            self.position += 1
        return token

    def at(self, text: str, offset: int = 0) -> bool:
        token = self.peek(offset)
        return token.kind in (IDENT, OP) and token.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected '{text}', found {self.peek()}")
        return self.next()

    def ident(self, what: str = "a name") -> str:
        token = self.peek()
        if token.kind != IDENT:
            raise self.error(f"expected {what}, found {token}")
        return self.next().text

    def integer(self) -> int:
        negative = self.accept("-")
        token = self.peek()
        if token.kind != INT:
            raise self.error(f"expected an integer, found {token}")
        self.next()
        return -int(token.text) if negative else int(token.text)

    def at_end(self) -> bool:
        return self.peek().kind == EOF

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.peek()
        return ParseError(message, source=self.source, line=token.line, column=token.column)
