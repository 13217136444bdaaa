"""Tokenizer for the Erlang-like surface syntax."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = frozenset(
    "fun end case of when if andalso orelse rem div not begin".split()
)

# longest first
PUNCTUATION = (
    "=:=", "=/=", "||", "->", "<-", "==", "/=", "=<", ">=", "++", "--", "::",
    "(", ")", "[", "]", "{", "}", ",", ";", ".", "|", ":", "=", "<", ">",
    "+", "-", "*", "/", "!",
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'", "s": " ", "0": "\0"}


@dataclass(frozen=True)
class Token:
    kind: str  # atom, var, int, float, string, kw, punct, macro, eof
    value: object
    line: int
    column: int

    def is_punct(self, text: str) -> bool:
        return self.kind == "punct" and self.value == text

    def is_kw(self, text: str) -> bool:
        return self.kind == "kw" and self.value == text

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return repr(self.value)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def err(msg: str):
        raise ParseError(msg, line, col)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            kind = "int"
            if j + 1 < n and source[j] == "." and source[j + 1].isdigit():
                kind = "float"
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                if j < n and source[j] in "eE":
                    k = j + 1
                    if k < n and source[k] in "+-":
                        k += 1
                    if k < n and source[k].isdigit():
                        j = k
                        while j < n and source[j].isdigit():
                            j += 1
            text = source[i:j]
            value = float(text) if kind == "float" else int(text)
            tokens.append(Token(kind, value, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_@"):
                j += 1
            text = source[i:j]
            if c.isupper() or c == "_":
                tokens.append(Token("var", text, start_line, start_col))
            elif text in KEYWORDS:
                tokens.append(Token("kw", text, start_line, start_col))
            else:
                tokens.append(Token("atom", text, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "?":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            if j == i + 1:
                err("expected macro name after '?'")
            tokens.append(Token("macro", source[i + 1:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c in "\"'":
            quote = c
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    err("unterminated quoted text")
                ch = source[j]
                if ch == quote:
                    j += 1
                    break
                if ch == "\\":
                    if j + 1 >= n:
                        err("dangling escape")
                    esc = source[j + 1]
                    buf.append(_ESCAPES.get(esc, esc))
                    j += 2
                    continue
                if ch == "\n":
                    line += 1
                    col = 0
                buf.append(ch)
                j += 1
            kind = "string" if quote == '"' else "atom"
            tokens.append(Token(kind, "".join(buf), start_line, start_col))
            col += j - i
            i = j
            continue
        for p in PUNCTUATION:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            err(f"unexpected character {c!r}")
    tokens.append(Token("eof", None, line, col))
    return tokens
