"""Runtime terms of the mini-language.

Python natives carry most of the value kinds:

    int, float, bool, str   Int, Float, Bool, Str
    list                    List (never mutated once built)
    tuple                   Tuple
    Atom / Pid / FunRef / Closure   the rest

``bool`` is a subclass of ``int`` in Python, so equality and ordering must
go through :func:`term_eq` and :func:`term_compare` rather than ``==``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Any


class Atom:
    __slots__ = ("name",)
    _table: dict[str, "Atom"] = {}

    def __new__(cls, name: str) -> "Atom":
        atom = cls._table.get(name)
        if atom is None:
            fresh = super().__new__(cls)
            fresh.name = name
            atom = cls._table.setdefault(name, fresh)
        return atom

    def __reduce__(self):
        return (Atom, (self.name,))

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"

    def __str__(self) -> str:
        return format_atom(self.name)

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return hash(("atom", self.name))


def atom(name: str) -> Atom:
    return Atom(name)


OK = Atom("ok")
UNDEFINED = Atom("undefined")

_pid_counter = itertools.count(1)


class Pid:
    """Process identifier; equality is identity."""

    __slots__ = ("serial",)

    def __init__(self) -> None:
        self.serial = next(_pid_counter)

    def __repr__(self) -> str:
        return f"<0.{self.serial}.0>"


@dataclass(frozen=True)
class FunRef:
    module: str
    name: str
    arity: int


@dataclass(eq=False)
class Closure:
    """An anonymous function value.

    ``clauses`` are :class:`edbc.syntax.FunClause` nodes; ``env`` holds only
    the bindings that are free in them.
    """

    clauses: tuple
    env: dict[str, Any]
    module: str
    arity: int = field(init=False)

    def __post_init__(self) -> None:
        self.arity = len(self.clauses[0].patterns)


def is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def is_integer(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def is_atom_like(v: Any) -> bool:
    return isinstance(v, (Atom, bool))


def is_value(v: Any) -> bool:
    if isinstance(v, (bool, int, float, str, Atom, Pid, FunRef, Closure)):
        return True
    if isinstance(v, (list, tuple)):
        return all(is_value(x) for x in v)
    return False


def term_eq(a: Any, b: Any, exact: bool = False) -> bool:
    """Structural equality (``==``); ``exact`` gives ``=:=``."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if is_number(a) and is_number(b):
        if exact and type(a) is not type(b):
            return False
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(term_eq(x, y, exact) for x, y in zip(a, b))
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(term_eq(x, y, exact) for x, y in zip(a, b))
    if isinstance(a, (Pid, Closure)):
        return a is b
    if type(a) is not type(b):
        return False
    return a == b


# number < atom < fun < pid < tuple < list < string
def _rank(v: Any) -> int:
    if is_number(v):
        return 0
    if isinstance(v, (Atom, bool)):
        return 1
    if isinstance(v, (Closure, FunRef)):
        return 2
    if isinstance(v, Pid):
        return 3
    if isinstance(v, tuple):
        return 4
    if isinstance(v, list):
        return 5
    if isinstance(v, str):
        return 6
    raise TypeError(f"not a term: {v!r}")


def _atom_text(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return v.name


def term_compare(a: Any, b: Any) -> int:
    """Total order over terms; returns -1, 0 or 1."""
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 0:
        return (a > b) - (a < b)
    if ra == 1:
        x, y = _atom_text(a), _atom_text(b)
        return (x > y) - (x < y)
    if ra == 2:
        x, y = id(a), id(b)
        if isinstance(a, FunRef) and isinstance(b, FunRef):
            x, y = (a.module, a.name, a.arity), (b.module, b.name, b.arity)
        return (x > y) - (x < y)
    if ra == 3:
        return (a.serial > b.serial) - (a.serial < b.serial)
    if ra == 4:
        if len(a) != len(b):
            return -1 if len(a) < len(b) else 1
        return _compare_seq(a, b)
    if ra == 5:
        return _compare_seq(a, b)
    return (a > b) - (a < b)


def _compare_seq(a, b) -> int:
    for x, y in zip(a, b):
        c = term_compare(x, y)
        if c:
            return c
    return (len(a) > len(b)) - (len(a) < len(b))


_BARE_ATOM = re.compile(r"[a-z][A-Za-z0-9_@]*\Z")
RESERVED_WORDS = frozenset(
    "after and andalso band begin bnot bor bsl bsr bxor case catch cond div end "
    "fun if let not of or orelse receive rem try when xor".split()
)


def format_atom(name: str) -> str:
    if _BARE_ATOM.match(name) and name not in RESERVED_WORDS:
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def format_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def format_float(x: float) -> str:
    text = repr(x)
    if "e" in text and "." not in text.split("e")[0]:
        mantissa, exp = text.split("e")
        text = f"{mantissa}.0e{exp}"
    return text


def format_value(v: Any) -> str:
    """Render a term the way Erlang's ``~w`` would."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, Atom):
        return format_atom(v.name)
    if isinstance(v, str):
        return format_string(v)
    if isinstance(v, list):
        return "[" + ",".join(format_value(x) for x in v) + "]"
    if isinstance(v, tuple):
        return "{" + ",".join(format_value(x) for x in v) + "}"
    if isinstance(v, Pid):
        return repr(v)
    if isinstance(v, FunRef):
        return f"fun {format_atom(v.module)}:{format_atom(v.name)}/{v.arity}"
    if isinstance(v, Closure):
        return f"#Fun<{v.module}.{id(v) & 0xFFFF}.{v.arity}>"
    raise TypeError(f"not a term: {v!r}")


def format_args(args) -> str:
    return ",".join(format_value(a) for a in args)
