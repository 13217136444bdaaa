"""Tree-walking evaluator for the mini-language."""
from __future__ import annotations

from typing import Any

from ..errors import EvalError
from ..syntax import (
    BinOp, Call, Case, Fun, FunDef, FunRefExpr, If, ListComp, ListExpr, Lit,
    Match, PAlias, PCons, PLit, PNil, PTuple, PVar, ParamRef, ResultRef,
    TupleExpr, UnOp, Var, Wildcard,
)
from ..values import (
    Closure, FunRef, format_args, format_value, is_integer, is_number,
    term_compare, term_eq,
)
from ..walk import free_vars
from .process import EvalContext


def _bad(reason: str, *parts) -> EvalError:
    return EvalError(reason, " ".join(format_value(p) if not isinstance(p, str) else p for p in parts))


# ---------------------------------------------------------------- operators


def arith(op: str, a: Any, b: Any) -> Any:
    if not (is_number(a) and is_number(b)):
        raise _bad("badarith", format_value(a), op, format_value(b))
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise _bad("badarith", format_value(a), "/", "0")
        return a / b
    if not (is_integer(a) and is_integer(b)) or b == 0:
        raise _bad("badarith", format_value(a), op, format_value(b))
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return q if op == "div" else a - b * q


def compare(op: str, a: Any, b: Any) -> bool:
    if op == "==":
        return term_eq(a, b)
    if op == "/=":
        return not term_eq(a, b)
    if op == "=:=":
        return term_eq(a, b, exact=True)
    if op == "=/=":
        return not term_eq(a, b, exact=True)
    c = term_compare(a, b)
    if op == "<":
        return c < 0
    if op == "=<":
        return c <= 0
    if op == ">":
        return c > 0
    return c >= 0


def append(a: Any, b: Any) -> Any:
    if isinstance(a, str) and isinstance(b, str):
        return a + b
    if isinstance(a, list) and isinstance(b, list):
        return a + b
    if isinstance(a, list) and not a:
        return b
    if isinstance(a, str) and isinstance(b, list) and not b:
        return a
    raise _bad("badarg", format_value(a), "++", format_value(b))


def subtract(a: Any, b: Any) -> list:
    if not (isinstance(a, list) and isinstance(b, list)):
        raise _bad("badarg", format_value(a), "--", format_value(b))
    out = list(a)
    for x in b:
        for i, y in enumerate(out):
            if term_eq(x, y, exact=True):
                del out[i]
                break
    return out


def binop(op: str, a: Any, b: Any) -> Any:
    if op in ("+", "-", "*", "/", "div", "rem"):
        return arith(op, a, b)
    if op == "++":
        return append(a, b)
    if op == "--":
        return subtract(a, b)
    return compare(op, a, b)


# ---------------------------------------------------------------- patterns


def match(p, v: Any, env: dict, out: dict) -> bool:
    """Match ``v`` against ``p``; new bindings go to ``out``.

    Names already bound in ``env`` or ``out`` act as equality constraints.
    """
    t = type(p)
    if t is PVar:
        name = p.name
        if name in out:
            return term_eq(out[name], v, exact=True)
        if name in env:
            return term_eq(env[name], v, exact=True)
        out[name] = v
        return True
    if t is Wildcard:
        return True
    if t is PLit:
        return term_eq(p.value, v, exact=True)
    if t is PNil:
        return isinstance(v, list) and not v
    if t is PTuple:
        if not isinstance(v, tuple) or len(v) != len(p.elements):
            return False
        return all(match(q, x, env, out) for q, x in zip(p.elements, v))
    if t is PCons:
        if not isinstance(v, list):
            return False
        i = 0
        cur = p
        while type(cur) is PCons:
            if i >= len(v) or not match(cur.head, v[i], env, out):
                return False
            i += 1
            cur = cur.tail
        return match(cur, v[i:] if i else v, env, out)
    if t is PAlias:
        return match(p.left, v, env, out) and match(p.right, v, env, out)
    raise TypeError(f"not a pattern: {p!r}")


def match_all(patterns, values, env: dict, out: dict) -> bool:
    for p, v in zip(patterns, values):
        if not match(p, v, env, out):
            return False
    return True


# ---------------------------------------------------------------- evaluator


class Interpreter:
    def __init__(self, runtime):
        self.rt = runtime
        self._dispatch = {
            Lit: self._lit, Var: self._var, BinOp: self._binop, UnOp: self._unop,
            Call: self._call, ListExpr: self._list, TupleExpr: self._tuple,
            Match: self._match, Case: self._case, If: self._if, Fun: self._fun,
            FunRefExpr: self._funref, ListComp: self._listcomp,
            ParamRef: self._unsubstituted, ResultRef: self._unsubstituted,
        }

    # -- entry points

    def call(self, ctx: EvalContext, module: str, name: str, args: list) -> Any:
        mod = self.rt.modules.get(module)
        if mod is not None:
            f = mod.functions.get((name, len(args)))
            if f is not None:
                return self.call_fundef(ctx, mod, f, args)
        b = self.rt.builtins.get(module, name, len(args))
        if b is not None:
            return self.call_builtin(ctx, b, args)
        raise EvalError("undef", f"{module}:{name}/{len(args)}")

    def apply(self, ctx: EvalContext, fun: Any, args: list) -> Any:
        if isinstance(fun, Closure):
            if fun.arity != len(args):
                raise EvalError("badarity", f"{format_value(fun)} applied to {len(args)} arguments")
            return self.call_closure(ctx, fun, args)
        if isinstance(fun, FunRef):
            if fun.arity != len(args):
                raise EvalError("badarity", f"{format_value(fun)} applied to {len(args)} arguments")
            return self.call(ctx, fun.module, fun.name, args)
        raise EvalError("badfun", format_value(fun))

    def call_builtin(self, ctx: EvalContext, b, args: list) -> Any:
        if not b.pure:
            ctx.note_impure(b.module, b.name, b.arity)
        return b.fn(self, ctx, args)

    def _enter(self, ctx: EvalContext, module: str, name: str, arity: int) -> None:
        ab = ctx.abort
        if ab._set or ab.parent is not None:
            ab.check()
        if ctx.depth >= self.rt.config.max_depth:
            raise EvalError("system_limit", f"call depth exceeded in {module}:{name}/{arity}")
        if ctx.tracer is not None:
            ctx.tracer(module, name, arity)

    def call_fundef(self, ctx: EvalContext, mod, f: FunDef, args: list) -> Any:
        self._enter(ctx, mod.name, f.name, f.arity)
        saved_module, saved_calls = ctx.module, len(ctx.callinfo)
        ctx.depth += 1
        ctx.module = mod.name
        try:
            for c in f.clauses:
                env: dict = {}
                if match_all(c.patterns, args, {}, env) and (c.guard is None or self.guard(c.guard, env, ctx)):
                    return self.body(c.body, env, ctx)
            raise EvalError("function_clause", f"{mod.name}:{f.name}({format_args(args)})")
        finally:
            ctx.depth -= 1
            ctx.module = saved_module
            del ctx.callinfo[saved_calls:]

    def call_closure(self, ctx: EvalContext, fun: Closure, args: list) -> Any:
        self._enter(ctx, fun.module, "-fun-", fun.arity)
        saved_module, saved_calls = ctx.module, len(ctx.callinfo)
        ctx.depth += 1
        ctx.module = fun.module
        try:
            for c in fun.clauses:
                new: dict = {}
                if match_all(c.patterns, args, {}, new):
                    env = dict(fun.env)
                    env.update(new)
                    if c.guard is None or self.guard(c.guard, env, ctx):
                        return self.body(c.body, env, ctx)
            raise EvalError("function_clause", f"{format_value(fun)}({format_args(args)})")
        finally:
            ctx.depth -= 1
            ctx.module = saved_module
            del ctx.callinfo[saved_calls:]

    # -- expressions

    def ev(self, e, env: dict, ctx: EvalContext) -> Any:
        return self._dispatch[type(e)](e, env, ctx)

    def body(self, exprs, env: dict, ctx: EvalContext) -> Any:
        result = None
        for e in exprs:
            result = self._dispatch[type(e)](e, env, ctx)
        return result

    def guard(self, g, env: dict, ctx: EvalContext) -> bool:
        try:
            return self.ev(g, env, ctx) is True
        except EvalError:
            return False

    def _lit(self, e, env, ctx):
        return e.value

    def _var(self, e, env, ctx):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError("unbound", e.name) from None

    def _binop(self, e, env, ctx):
        op = e.op
        if op == "andalso" or op == "orelse":
            lhs = self.ev(e.lhs, env, ctx)
            if lhs is not True and lhs is not False:
                raise _bad("badarg", format_value(lhs), op)
            if (op == "andalso") is lhs:
                return self.ev(e.rhs, env, ctx)
            return lhs
        return binop(op, self.ev(e.lhs, env, ctx), self.ev(e.rhs, env, ctx))

    def _unop(self, e, env, ctx):
        v = self.ev(e.operand, env, ctx)
        if e.op == "not":
            if v is True or v is False:
                return not v
            raise _bad("badarg", "not", format_value(v))
        if not is_number(v):
            raise _bad("badarith", e.op, format_value(v))
        return -v if e.op == "-" else v

    def _list(self, e, env, ctx):
        items = [self.ev(x, env, ctx) for x in e.elements]
        if e.tail is None:
            return items
        tail = self.ev(e.tail, env, ctx)
        if not isinstance(tail, list):
            raise _bad("badarg", "improper list tail", format_value(tail))
        return items + tail

    def _tuple(self, e, env, ctx):
        return tuple(self.ev(x, env, ctx) for x in e.elements)

    def _match(self, e, env, ctx):
        v = self.ev(e.expr, env, ctx)
        new: dict = {}
        if not match(e.pattern, v, env, new):
            raise EvalError("badmatch", format_value(v))
        env.update(new)
        return v

    def _case(self, e, env, ctx):
        v = self.ev(e.scrutinee, env, ctx)
        for c in e.clauses:
            new: dict = {}
            if match(c.pattern, v, env, new):
                if c.guard is not None:
                    trial = dict(env)
                    trial.update(new)
                    if not self.guard(c.guard, trial, ctx):
                        continue
                env.update(new)
                return self.body(c.body, env, ctx)
        raise EvalError("case_clause", format_value(v))

    def _if(self, e, env, ctx):
        for c in e.clauses:
            if self.guard(c.guard, env, ctx):
                return self.body(c.body, env, ctx)
        raise EvalError("if_clause")

    def _fun(self, e, env, ctx):
        captured = {k: env[k] for k in free_vars(e) if k in env}
        return Closure(e.clauses, captured, ctx.module or "")

    def _funref(self, e, env, ctx):
        return FunRef(e.module or ctx.module or "", e.name, e.arity)

    def _listcomp(self, e, env, ctx):
        src = self.ev(e.source, env, ctx)
        if not isinstance(src, list):
            raise _bad("badarg", "generator", format_value(src))
        out = []
        for item in src:
            new: dict = {}
            if not match(e.pattern, item, {}, new):
                continue
            inner = dict(env)
            inner.update(new)
            ok = True
            for flt in e.filters:
                r = self.ev(flt, inner, ctx)
                if r is False:
                    ok = False
                    break
                if r is not True:
                    raise _bad("badarg", "filter", format_value(r))
            if ok:
                out.append(self.ev(e.template, inner, ctx))
        return out

    def _call(self, e, env, ctx):
        if e.fun is not None:
            fun = self.ev(e.fun, env, ctx)
            args = [self.ev(a, env, ctx) for a in e.args]
            return self.apply(ctx, fun, args)
        args = [self.ev(a, env, ctx) for a in e.args]
        if e.module is None:
            mod = self.rt.modules.get(ctx.module)
            if mod is not None:
                f = mod.functions.get((e.name, len(args)))
                if f is not None:
                    return self.call_fundef(ctx, mod, f, args)
            b = self.rt.builtins.get(None, e.name, len(args))
            if b is None:
                raise EvalError("undef", f"{ctx.module}:{e.name}/{len(args)}")
            return self.call_builtin(ctx, b, args)
        return self.call(ctx, e.module, e.name, args)

    def _unsubstituted(self, e, env, ctx):
        raise EvalError("badarg", "?P/?R used outside a contract")

