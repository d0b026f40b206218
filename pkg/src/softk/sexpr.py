"""Reader and printer for the s-expression event-script format.

Forms are plain immutable values: :class:`Atom` for symbols, numerals,
character literals and strings, :class:`ListForm` for (possibly dotted)
lists. Source locations ride along but never take part in equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import ParseError

SYMBOL = "symbol"
NUMBER = "number"
CHAR = "char"
STRING = "string"

_DELIMS = set("()\";'")
NUMBER_RE = re.compile(r"[+-]?[0-9]+\Z")
_CHAR_NAMES = {"space": " ", "newline": "\n", "tab": "\t", "page": "\f", "rubout": "\x7f"}


@dataclass(frozen=True)
class Atom:
    kind: str
    text: str
    line: int = field(default=0, compare=False, repr=False)
    col: int = field(default=0, compare=False, repr=False)

    @property
    def is_symbol(self) -> bool:
        return self.kind == SYMBOL


@dataclass(frozen=True)
class ListForm:
    elements: tuple
    tail: Optional["Form"] = None
    line: int = field(default=0, compare=False, repr=False)
    col: int = field(default=0, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    @property
    def head(self) -> Optional[str]:
        """Symbol text of the first element, if it is a symbol."""
        if self.elements and isinstance(self.elements[0], Atom) and self.elements[0].is_symbol:
            return self.elements[0].text
        return None


Form = Union[Atom, ListForm]


def sym(text: str) -> Atom:
    return Atom(SYMBOL, text.lower())


def num(n: int) -> Atom:
    return Atom(NUMBER, str(n))


def lst(*elements: Form, tail: Optional[Form] = None) -> ListForm:
    return ListForm(tuple(elements), tail)


def is_symbol(form, text: Optional[str] = None) -> bool:
    return isinstance(form, Atom) and form.is_symbol and (text is None or form.text == text)


def is_keyword(form) -> bool:
    return is_symbol(form) and form.text.startswith(":") and len(form.text) > 1


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _skip_blank(self) -> None:
        while self.pos < len(self.text):
            ch = self._peek()
            if ch.isspace():
                self._advance()
            elif ch == ";":
                while self.pos < len(self.text) and self._peek() != "\n":
                    self._advance()
            else:
                return

    def forms(self) -> Iterator[Form]:
        while True:
            self._skip_blank()
            if self.pos >= len(self.text):
                return
            if self._peek() == ")":
                raise ParseError("unbalanced ')'", self.line, self.col)
            yield self._form()

    def _form(self) -> Form:
        self._skip_blank()
        line, col = self.line, self.col
        ch = self._peek()
        if ch == "":
            raise ParseError("unexpected end of input", line, col)
        if ch == "(":
            self._advance()
            return self._list(line, col)
        if ch == ")":
            raise ParseError("unbalanced ')'", line, col)
        if ch == "'":
            self._advance()
            quoted = self._form()
            return ListForm((Atom(SYMBOL, "quote", line, col), quoted), None, line, col)
        if ch == '"':
            return self._string(line, col)
        if ch == "#":
            return self._char(line, col)
        token = self._token()
        if token == ".":
            raise ParseError("misplaced dot", line, col)
        return self._atom(token, line, col)

    def _list(self, line: int, col: int) -> ListForm:
        elements = []
        while True:
            self._skip_blank()
            ch = self._peek()
            if ch == "":
                raise ParseError("unbalanced '('", line, col)
            if ch == ")":
                self._advance()
                return ListForm(tuple(elements), None, line, col)
            if ch == "." and self._is_lone_dot():
                dline, dcol = self.line, self.col
                self._advance()
                if not elements:
                    raise ParseError("dot before first element", dline, dcol)
                tail = self._form()
                self._skip_blank()
                if self._peek() != ")":
                    raise ParseError("expected ')' after dotted tail", self.line, self.col)
                self._advance()
                # (a . (b c)) is the proper list (a b c)
                if isinstance(tail, ListForm):
                    return ListForm(tuple(elements) + tail.elements, tail.tail, line, col)
                return ListForm(tuple(elements), tail, line, col)
            elements.append(self._form())

    def _is_lone_dot(self) -> bool:
        nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
        return nxt == "" or nxt.isspace() or nxt in _DELIMS

    def _token(self) -> str:
        start = self.pos
        while self.pos < len(self.text):
            ch = self._peek()
            if ch.isspace() or ch in _DELIMS:
                break
            self._advance()
        return self.text[start:self.pos]

    def _atom(self, token: str, line: int, col: int) -> Atom:
        if NUMBER_RE.match(token):
            return Atom(NUMBER, str(int(token)), line, col)
        if "." in token or "#" in token or "|" in token or "\\" in token or "`" in token or "," in token:
            raise ParseError(f"illegal atom {token!r}", line, col)
        return Atom(SYMBOL, token.lower(), line, col)

    def _string(self, line: int, col: int) -> Atom:
        self._advance()
        out = []
        while True:
            ch = self._peek()
            if ch == "":
                raise ParseError("unterminated string", line, col)
            self._advance()
            if ch == '"':
                return Atom(STRING, "".join(out), line, col)
            if ch == "\\":
                esc = self._peek()
                if esc not in ('"', "\\"):
                    raise ParseError("bad string escape", self.line, self.col)
                self._advance()
                out.append(esc)
            else:
                out.append(ch)

    def _char(self, line: int, col: int) -> Atom:
        self._advance()
        if self._peek() != "\\":
            raise ParseError("illegal atom '#'", line, col)
        self._advance()
        if self._peek() == "":
            raise ParseError("unterminated character literal", line, col)
        first = self._advance()
        rest = self._token()
        if not rest:
            return Atom(CHAR, first, line, col)
        name = (first + rest).lower()
        if name in _CHAR_NAMES:
            return Atom(CHAR, _CHAR_NAMES[name], line, col)
        if name.startswith("code") and name[4:].isdigit():
            return Atom(CHAR, chr(int(name[4:])), line, col)
        raise ParseError(f"unknown character name {first + rest!r}", line, col)


def read_forms(text: str) -> list:
    """Read every top-level form in ``text``."""
    return list(_Reader(text).forms())


def read_form(text: str) -> Form:
    forms = read_forms(text)
    if len(forms) != 1:
        raise ParseError(f"expected exactly one form, found {len(forms)}")
    return forms[0]


def _write_char(c: str) -> str:
    for name, value in _CHAR_NAMES.items():
        if c == value:
            return "#\\" + name.capitalize()
    if c.isprintable() and not c.isspace():
        return "#\\" + c
    return f"#\\Code{ord(c)}"


def write_form(form: Form) -> str:
    if isinstance(form, Atom):
        if form.kind == STRING:
            return '"' + form.text.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if form.kind == CHAR:
            return _write_char(form.text)
        return form.text
    inner = " ".join(write_form(e) for e in form.elements)
    if form.tail is not None:
        inner += " . " + write_form(form.tail)
    return "(" + inner + ")"
