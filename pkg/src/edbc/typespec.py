"""Runtime type language for ``-spec`` contracts and its membership checker."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .errors import ParseError
from .lexer import Token, tokenize
from .values import Atom, format_atom, is_integer, is_number


class TypeSpec:
    __slots__ = ()


@dataclass(frozen=True)
class AnyT(TypeSpec):
    pass


@dataclass(frozen=True)
class IntegerT(TypeSpec):
    pass


@dataclass(frozen=True)
class NonNegIntegerT(TypeSpec):
    pass


@dataclass(frozen=True)
class FloatT(TypeSpec):
    pass


@dataclass(frozen=True)
class NumberT(TypeSpec):
    pass


@dataclass(frozen=True)
class BooleanT(TypeSpec):
    pass


@dataclass(frozen=True)
class AtomT(TypeSpec):
    pass


@dataclass(frozen=True)
class LiteralAtomT(TypeSpec):
    name: str


@dataclass(frozen=True)
class StringT(TypeSpec):
    pass


@dataclass(frozen=True)
class ListT(TypeSpec):
    elem: TypeSpec


@dataclass(frozen=True)
class TupleT(TypeSpec):
    elements: tuple[TypeSpec, ...]


@dataclass(frozen=True)
class UnionT(TypeSpec):
    alternatives: tuple[TypeSpec, ...]

    def __post_init__(self):
        if len(self.alternatives) < 2:
            raise ValueError("a union needs at least two alternatives")


_NAMED = {
    "any": AnyT(),
    "term": AnyT(),
    "integer": IntegerT(),
    "non_neg_integer": NonNegIntegerT(),
    "float": FloatT(),
    "number": NumberT(),
    "boolean": BooleanT(),
    "atom": AtomT(),
    "string": StringT(),
}
_NAMES = {type(v): k for k, v in _NAMED.items() if k != "term"}


class _TypeParser:
    def __init__(self, tokens: list[Token], pos: int = 0):
        self.tokens = tokens
        self.pos = pos

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def expect(self, text: str) -> None:
        if not self.tok.is_punct(text):
            raise ParseError(f"expected {text!r}, found {self.tok.describe()}", self.tok.line, self.tok.column)
        self.pos += 1

    def union(self) -> TypeSpec:
        alts = [self.single()]
        while self.tok.is_punct("|"):
            self.pos += 1
            alts.append(self.single())
        return alts[0] if len(alts) == 1 else UnionT(tuple(alts))

    def single(self) -> TypeSpec:
        tok = self.tok
        if tok.is_punct("["):
            self.pos += 1
            if self.tok.is_punct("]"):
                self.pos += 1
                return ListT(AnyT())
            elem = self.union()
            self.expect("]")
            return ListT(elem)
        if tok.is_punct("{"):
            self.pos += 1
            elems = []
            if not self.tok.is_punct("}"):
                elems.append(self.union())
                while self.tok.is_punct(","):
                    self.pos += 1
                    elems.append(self.union())
            self.expect("}")
            return TupleT(tuple(elems))
        if tok.kind == "kw" and tok.value == "fun":
            raise ParseError("function types are not supported in specs", tok.line, tok.column)
        if tok.kind in ("atom", "kw"):
            self.pos += 1
            if self.tok.is_punct("("):
                self.pos += 1
                name = tok.value
                if name == "list" and not self.tok.is_punct(")"):
                    elem = self.union()
                    self.expect(")")
                    return ListT(elem)
                self.expect(")")
                if name == "list":
                    return ListT(AnyT())
                if name == "tuple":
                    raise ParseError("tuple() of unknown arity is not supported", tok.line, tok.column)
                if name not in _NAMED:
                    raise ParseError(f"unknown type {name}()", tok.line, tok.column)
                return _NAMED[name]
            return LiteralAtomT(tok.value)
        raise ParseError(f"unexpected {tok.describe()} in type", tok.line, tok.column)


def parse_typespec(text: str) -> TypeSpec:
    tokens = tokenize(text)
    parser = _TypeParser(tokens)
    t = parser.union()
    if parser.tok.kind != "eof":
        raise ParseError(f"trailing {parser.tok.describe()} after type", parser.tok.line, parser.tok.column)
    return t


def parse_type_at(tokens: list[Token], pos: int) -> tuple[TypeSpec, int]:
    """Parse one type starting at ``tokens[pos]``; used by the module parser."""
    parser = _TypeParser(tokens, pos)
    return parser.union(), parser.pos


def format_type(t: TypeSpec) -> str:
    if isinstance(t, LiteralAtomT):
        return format_atom(t.name)
    if isinstance(t, ListT):
        return "[" + format_type(t.elem) + "]"
    if isinstance(t, TupleT):
        return "{" + ", ".join(format_type(e) for e in t.elements) + "}"
    if isinstance(t, UnionT):
        return " | ".join(format_type(a) for a in t.alternatives)
    return _NAMES[type(t)] + "()"


def type_check(v: Any, t: TypeSpec) -> bool:
    """True iff ``v`` inhabits ``t``. Never raises on well-formed input."""
    if isinstance(t, AnyT):
        return True
    if isinstance(t, IntegerT):
        return is_integer(v)
    if isinstance(t, NonNegIntegerT):
        return is_integer(v) and v >= 0
    if isinstance(t, FloatT):
        return isinstance(v, float)
    if isinstance(t, NumberT):
        return is_number(v)
    if isinstance(t, BooleanT):
        return isinstance(v, bool)
    if isinstance(t, AtomT):
        return isinstance(v, (Atom, bool))
    if isinstance(t, LiteralAtomT):
        if isinstance(v, bool):
            return t.name == ("true" if v else "false")
        return isinstance(v, Atom) and v.name == t.name
    if isinstance(t, StringT):
        return isinstance(v, str)
    if isinstance(t, ListT):
        return isinstance(v, list) and all(type_check(x, t.elem) for x in v)
    if isinstance(t, TupleT):
        return (
            isinstance(v, tuple)
            and len(v) == len(t.elements)
            and all(type_check(x, e) for x, e in zip(v, t.elements))
        )
    if isinstance(t, UnionT):
        return any(type_check(v, a) for a in t.alternatives)
    return False
