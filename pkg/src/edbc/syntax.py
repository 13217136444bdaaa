"""AST for the mini-language, with contracts attached to function definitions.

All nodes are frozen dataclasses holding tuples, so two trees compare equal
iff they are structurally equal. Source positions are not part of the tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .typespec import TypeSpec

# ---------------------------------------------------------------- patterns


class Pattern:
    __slots__ = ()


@dataclass(frozen=True)
class Wildcard(Pattern):
    pass


@dataclass(frozen=True)
class PVar(Pattern):
    name: str


@dataclass(frozen=True)
class PLit(Pattern):
    """Literal atom / int / float / bool / string."""

    value: Any

    def __eq__(self, other):
        from .values import term_eq

        return isinstance(other, PLit) and term_eq(self.value, other.value, exact=True)

    def __hash__(self):
        return hash(("plit", repr(self.value)))


@dataclass(frozen=True)
class PCons(Pattern):
    head: Pattern
    tail: Pattern


@dataclass(frozen=True)
class PNil(Pattern):
    pass


@dataclass(frozen=True)
class PTuple(Pattern):
    elements: tuple[Pattern, ...]


@dataclass(frozen=True)
class PAlias(Pattern):
    """``P1 = P2`` inside a pattern: the value must match both."""

    left: Pattern
    right: Pattern


# ---------------------------------------------------------------- expressions


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    value: Any

    def __eq__(self, other):
        from .values import term_eq

        return isinstance(other, Lit) and term_eq(self.value, other.value, exact=True)

    def __hash__(self):
        return hash(("lit", repr(self.value)))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class ListExpr(Expr):
    elements: tuple[Expr, ...]
    tail: Optional[Expr] = None


@dataclass(frozen=True)
class TupleExpr(Expr):
    elements: tuple[Expr, ...]


BINARY_OPS = frozenset(
    "+ - * / div rem == /= =:= =/= < =< > >= andalso orelse ++ --".split()
)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # '-', '+', 'not'
    operand: Expr


@dataclass(frozen=True)
class Match(Expr):
    pattern: Pattern
    expr: Expr


@dataclass(frozen=True)
class Call(Expr):
    """Function application.

    Exactly one target form is used: ``name`` alone is a local call,
    ``module`` + ``name`` a remote call, ``fun`` an applied expression.
    """

    args: tuple[Expr, ...]
    name: Optional[str] = None
    module: Optional[str] = None
    fun: Optional[Expr] = None


@dataclass(frozen=True)
class FunClause:
    patterns: tuple[Pattern, ...]
    guard: Optional[Expr]
    body: tuple[Expr, ...]


@dataclass(frozen=True)
class Fun(Expr):
    clauses: tuple[FunClause, ...]


@dataclass(frozen=True)
class FunRefExpr(Expr):
    name: str
    arity: int
    module: Optional[str] = None


@dataclass(frozen=True)
class CaseClause:
    pattern: Pattern
    guard: Optional[Expr]
    body: tuple[Expr, ...]


@dataclass(frozen=True)
class Case(Expr):
    scrutinee: Expr
    clauses: tuple[CaseClause, ...]


@dataclass(frozen=True)
class IfClause:
    guard: Expr
    body: tuple[Expr, ...]


@dataclass(frozen=True)
class If(Expr):
    clauses: tuple[IfClause, ...]


@dataclass(frozen=True)
class ListComp(Expr):
    template: Expr
    pattern: Pattern
    source: Expr
    filters: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class ParamRef(Expr):
    index: int


@dataclass(frozen=True)
class ResultRef(Expr):
    pass


# ---------------------------------------------------------------- contracts


class Contract:
    __slots__ = ()
    kind = "contract"


@dataclass(frozen=True)
class Pre(Contract):
    """``tag`` is "pre" for user contracts; lowered forms use spec,
    expected_time, timeout or pure."""

    cond: Expr
    tag: str = "pre"
    kind = "pre"


@dataclass(frozen=True)
class Post(Contract):
    cond: Expr
    tag: str = "post"  # or spec, invariant
    kind = "post"


@dataclass(frozen=True)
class Decreases(Contract):
    params: tuple[int, ...]
    strict: bool
    kind = "decrease"


@dataclass(frozen=True)
class ExpectedTime(Contract):
    timefun: Expr
    kind = "expected_time"


@dataclass(frozen=True)
class Timeout(Contract):
    timefun: Expr
    kind = "timeout"


@dataclass(frozen=True)
class Pure(Contract):
    kind = "pure"


@dataclass(frozen=True)
class Invariant(Contract):
    invfun: Expr
    kind = "invariant"


@dataclass(frozen=True)
class Spec(Contract):
    argtypes: tuple[TypeSpec, ...]
    rettype: TypeSpec
    kind = "spec"


PRE_PLACED = (Pre, Decreases, ExpectedTime, Timeout, Pure)


# ---------------------------------------------------------------- definitions


@dataclass(frozen=True)
class Clause:
    patterns: tuple[Pattern, ...]
    guard: Optional[Expr]
    body: tuple[Expr, ...]


@dataclass(frozen=True)
class FunDef:
    name: str
    arity: int
    clauses: tuple[Clause, ...]
    contracts: tuple[Contract, ...] = ()

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, self.arity)

    def renamed(self, name: str) -> "FunDef":
        return replace(self, name=name)


@dataclass(frozen=True)
class Attribute:
    """A module attribute kept verbatim for printing, e.g. ``-export([f/1])``."""

    name: str
    value: Any


@dataclass(frozen=True)
class ModuleAst:
    name: str
    fundefs: tuple[FunDef, ...] = ()
    module_invariant: Optional[Invariant] = None
    attributes: tuple[Attribute, ...] = field(default=())

    def get(self, name: str, arity: int) -> Optional[FunDef]:
        for f in self.fundefs:
            if f.name == name and f.arity == arity:
                return f
        return None

    def keys(self) -> set[tuple[str, int]]:
        return {f.key for f in self.fundefs}
