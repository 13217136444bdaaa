"""Pretty-printer producing source that parses back to an equal AST."""
from __future__ import annotations

from .syntax import (
    Attribute, BinOp, Call, Case, Clause, Contract, Decreases, ExpectedTime,
    Expr, Fun, FunDef, FunRefExpr, If, Invariant, ListComp, ListExpr, Lit,
    Match, ModuleAst, PAlias, PCons, PLit, PNil, PTuple, PVar, ParamRef,
    Pattern, Post, Pre, Pure, ResultRef, Spec, Timeout, TupleExpr, UnOp, Var,
    Wildcard,
)
from .typespec import format_type
from .values import Atom, format_atom, format_value

INDENT = "    "

_PREC = {
    "orelse": 2, "andalso": 3,
    "==": 4, "/=": 4, "=:=": 4, "=/=": 4, "<": 4, "=<": 4, ">": 4, ">=": 4,
    "++": 5, "--": 5,
    "+": 6, "-": 6,
    "*": 7, "/": 7, "div": 7, "rem": 7,
}
_RIGHT = {"orelse", "andalso", "++", "--"}
_NONASSOC = {"==", "/=", "=:=", "=/=", "<", "=<", ">", ">="}
MATCH_PREC, UNARY_PREC, PRIMARY_PREC = 1, 8, 9


def _prec(e: Expr) -> int:
    if isinstance(e, Match):
        return MATCH_PREC
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, UnOp):
        return UNARY_PREC
    if isinstance(e, Lit) and isinstance(e.value, (int, float)) and not isinstance(e.value, bool) \
            and e.value < 0:
        return UNARY_PREC
    return PRIMARY_PREC


def expr_to_str(e: Expr, min_prec: int = 0) -> str:
    text = _expr(e)
    if _prec(e) < min_prec:
        return f"({text})"
    return text


def _expr(e: Expr) -> str:
    if isinstance(e, Lit):
        return format_value(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        if e.op in _RIGHT:
            lp, rp = p + 1, p
        elif e.op in _NONASSOC:
            lp, rp = p + 1, p + 1
        else:
            lp, rp = p, p + 1
        return f"{expr_to_str(e.lhs, lp)} {e.op} {expr_to_str(e.rhs, rp)}"
    if isinstance(e, UnOp):
        inner = expr_to_str(e.operand, UNARY_PREC)
        if isinstance(e.operand, Lit) and not isinstance(e.operand.value, (Atom, str, bool)):
            inner = f"({inner})"
        if e.op == "not":
            return f"not {inner}"
        sep = " " if inner.startswith(("-", "+")) else ""
        return f"{e.op}{sep}{inner}"
    if isinstance(e, Match):
        return f"{pattern_to_str(e.pattern)} = {expr_to_str(e.expr, MATCH_PREC)}"
    if isinstance(e, ListExpr):
        items = ", ".join(expr_to_str(x) for x in e.elements)
        if e.tail is not None:
            return f"[{items} | {expr_to_str(e.tail)}]"
        return f"[{items}]"
    if isinstance(e, TupleExpr):
        return "{" + ", ".join(expr_to_str(x) for x in e.elements) + "}"
    if isinstance(e, Call):
        args = "(" + ", ".join(expr_to_str(a) for a in e.args) + ")"
        if e.fun is not None:
            target = e.fun
            if isinstance(target, (Var, Call)):
                return expr_to_str(target) + args
            return f"({expr_to_str(target)}){args}"
        if e.module is not None:
            return f"{format_atom(e.module)}:{format_atom(e.name)}{args}"
        return f"{format_atom(e.name)}{args}"
    if isinstance(e, FunRefExpr):
        if e.module is not None:
            return f"fun {format_atom(e.module)}:{format_atom(e.name)}/{e.arity}"
        return f"fun {format_atom(e.name)}/{e.arity}"
    if isinstance(e, Fun):
        parts = []
        for c in e.clauses:
            head = "(" + ", ".join(pattern_to_str(p) for p in c.patterns) + ")"
            if c.guard is not None:
                head += f" when {expr_to_str(c.guard)}"
            parts.append(f"{head} -> {_inline_body(c.body)}")
        return "fun" + "; ".join(parts) + " end"
    if isinstance(e, Case):
        parts = []
        for c in e.clauses:
            head = pattern_to_str(c.pattern)
            if c.guard is not None:
                head += f" when {expr_to_str(c.guard)}"
            parts.append(f"{head} -> {_inline_body(c.body)}")
        return f"case {expr_to_str(e.scrutinee)} of " + "; ".join(parts) + " end"
    if isinstance(e, If):
        parts = [f"{expr_to_str(c.guard)} -> {_inline_body(c.body)}" for c in e.clauses]
        return "if " + "; ".join(parts) + " end"
    if isinstance(e, ListComp):
        text = f"[{expr_to_str(e.template)} || {pattern_to_str(e.pattern)} <- {expr_to_str(e.source)}"
        for f in e.filters:
            text += f", {expr_to_str(f)}"
        return text + "]"
    if isinstance(e, ParamRef):
        return f"?P({e.index})"
    if isinstance(e, ResultRef):
        return "?R"
    raise TypeError(f"cannot print {e!r}")


def _inline_body(body) -> str:
    return ", ".join(expr_to_str(x) for x in body)


def pattern_to_str(p: Pattern) -> str:
    if isinstance(p, Wildcard):
        return "_"
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PLit):
        return format_value(p.value)
    if isinstance(p, PNil):
        return "[]"
    if isinstance(p, PTuple):
        return "{" + ", ".join(pattern_to_str(x) for x in p.elements) + "}"
    if isinstance(p, PAlias):
        return f"{pattern_to_str(p.left)} = {pattern_to_str(p.right)}"
    if isinstance(p, PCons):
        items = []
        cur: Pattern = p
        while isinstance(cur, PCons):
            items.append(pattern_to_str(cur.head))
            cur = cur.tail
        inner = ", ".join(items)
        if isinstance(cur, PNil):
            return f"[{inner}]"
        return f"[{inner} | {pattern_to_str(cur)}]"
    raise TypeError(f"cannot print pattern {p!r}")


def contract_to_str(c: Contract, fname: str = "") -> str:
    if isinstance(c, Pre):
        return f"?PRE({expr_to_str(c.cond)})."
    if isinstance(c, Post):
        return f"?POST({expr_to_str(c.cond)})."
    if isinstance(c, ExpectedTime):
        return f"?EXPECTED_TIME({expr_to_str(c.timefun)})."
    if isinstance(c, Timeout):
        return f"?TIMEOUT({expr_to_str(c.timefun)})."
    if isinstance(c, Pure):
        return "?PURE."
    if isinstance(c, Invariant):
        return f"?INVARIANT({expr_to_str(c.invfun)})."
    if isinstance(c, Decreases):
        macro = "SDECREASES" if c.strict else "DECREASES"
        if len(c.params) == 1:
            return f"?{macro}(?P({c.params[0]}))."
        return f"?{macro}([" + ", ".join(f"?P({i})" for i in c.params) + "])."
    if isinstance(c, Spec):
        return spec_to_str(c, fname)
    raise TypeError(f"cannot print contract {c!r}")


def spec_to_str(c: Spec, fname: str) -> str:
    args = ", ".join(format_type(t) for t in c.argtypes)
    return f"-spec {format_atom(fname)}({args}) -> {format_type(c.rettype)}."


def clause_to_str(name: str, c: Clause) -> str:
    head = f"{format_atom(name)}(" + ", ".join(pattern_to_str(p) for p in c.patterns) + ")"
    if c.guard is not None:
        head += f" when {expr_to_str(c.guard)}"
    parts = [expr_to_str(x) for x in c.body]
    if len(parts) == 1 and len(head) + len(parts[0]) < 72:
        return f"{head} -> {parts[0]}"
    body = (",\n" + INDENT).join(parts)
    return f"{head} ->\n{INDENT}{body}"


def fundef_to_str(f: FunDef) -> str:
    lines = []
    pre = [c for c in f.contracts if not isinstance(c, Post)]
    posts = [c for c in f.contracts if isinstance(c, Post)]
    for c in pre:
        lines.append(contract_to_str(c, f.name))
    lines.append(";\n".join(clause_to_str(f.name, c) for c in f.clauses) + ".")
    for c in posts:
        lines.append(contract_to_str(c, f.name))
    return "\n".join(lines)


def _attribute_to_str(a: Attribute) -> str:
    v = a.value
    if a.name in ("export", "import") and isinstance(v, list):
        items = ", ".join(
            f"{format_atom(n.name)}/{ar}" if isinstance(n, Atom) else format_value((n, ar))
            for n, ar in v
        )
        return f"-{a.name}([{items}])."
    return f"-{a.name}({format_value(v)})."


def pretty_print(m: ModuleAst) -> str:
    out = [f"-module({format_atom(m.name)})."]
    for a in m.attributes:
        out.append(_attribute_to_str(a))
    if m.module_invariant is not None:
        out.append("")
        out.append(contract_to_str(m.module_invariant))
    for f in m.fundefs:
        out.append("")
        out.append(fundef_to_str(f))
    return "\n".join(out) + "\n"
