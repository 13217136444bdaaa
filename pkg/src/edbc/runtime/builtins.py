"""Builtin functions, each tagged pure or impure for the purity tracer."""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..errors import EvalError
from ..values import (
    Atom, Closure, FunRef, OK, Pid, UNDEFINED, format_value, is_integer,
    is_number, term_compare, term_eq,
)
from .interp import binop

Fn = Callable[[Any, Any, list], Any]  # (interpreter, context, args) -> value


@dataclass(frozen=True)
class Builtin:
    module: str
    name: str
    arity: int
    fn: Fn
    pure: bool = True


class BuiltinTable:
    def __init__(self) -> None:
        self._table: dict[tuple[str, str, int], Builtin] = {}
        self._local: dict[tuple[str, int], Builtin] = {}

    def add(self, module: str, name: str, arity: int, fn: Fn, pure: bool = True,
            auto_import: bool = False) -> Builtin:
        b = Builtin(module, name, arity, fn, pure)
        self._table[(module, name, arity)] = b
        if auto_import:
            self._local[(name, arity)] = b
        return b

    def get(self, module: Optional[str], name: str, arity: int) -> Optional[Builtin]:
        if module is None:
            return self._local.get((name, arity))
        return self._table.get((module, name, arity))

    def __iter__(self):
        return iter(self._table.values())

    def __len__(self) -> int:
        return len(self._table)

    def impure(self) -> list[Builtin]:
        return [b for b in self._table.values() if not b.pure]


def _badarg(name: str, *args) -> EvalError:
    return EvalError("badarg", f"{name}({','.join(format_value(a) for a in args)})")


def _list_arg(name: str, v: Any) -> list:
    if not isinstance(v, list):
        raise _badarg(name, v)
    return v


def _int_arg(name: str, v: Any) -> int:
    if not is_integer(v):
        raise _badarg(name, v)
    return v


def _bool(name: str, v: Any) -> bool:
    if v is True or v is False:
        return v
    raise _badarg(name, v)


# ---------------------------------------------------------------- pure: erlang


def _length(i, ctx, a):
    (v,) = a
    if not isinstance(v, (list, str)):
        raise _badarg("length", v)
    return len(v)


def _hd(i, ctx, a):
    v = a[0]
    if not isinstance(v, list) or not v:
        raise _badarg("hd", v)
    return v[0]


def _tl(i, ctx, a):
    v = a[0]
    if not isinstance(v, list) or not v:
        raise _badarg("tl", v)
    return v[1:]


def _element(i, ctx, a):
    n, t = a
    if not is_integer(n) or not isinstance(t, tuple) or not 1 <= n <= len(t):
        raise _badarg("element", n, t)
    return t[n - 1]


def _setelement(i, ctx, a):
    n, t, v = a
    if not is_integer(n) or not isinstance(t, tuple) or not 1 <= n <= len(t):
        raise _badarg("setelement", n, t, v)
    return t[:n - 1] + (v,) + t[n:]


def _tuple_size(i, ctx, a):
    if not isinstance(a[0], tuple):
        raise _badarg("tuple_size", a[0])
    return len(a[0])


def _abs(i, ctx, a):
    if not is_number(a[0]):
        raise EvalError("badarith", f"abs({format_value(a[0])})")
    return abs(a[0])


def _minmax(pick_max: bool):
    def fn(i, ctx, a):
        x, y = a
        c = term_compare(x, y)
        return (x if c >= 0 else y) if pick_max else (x if c <= 0 else y)
    return fn


def _integer_to_list(i, ctx, a):
    return str(_int_arg("integer_to_list", a[0]))


def _atom_to_list(i, ctx, a):
    v = a[0]
    if isinstance(v, bool):
        return "true" if v else "false"
    if not isinstance(v, Atom):
        raise _badarg("atom_to_list", v)
    return v.name


def _list_to_atom(i, ctx, a):
    v = a[0]
    if not isinstance(v, str):
        raise _badarg("list_to_atom", v)
    if v in ("true", "false"):
        return v == "true"
    return Atom(v)


def _round(i, ctx, a):
    if not is_number(a[0]):
        raise _badarg("round", a[0])
    x = a[0]
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


def _trunc(i, ctx, a):
    if not is_number(a[0]):
        raise _badarg("trunc", a[0])
    return int(a[0])


def _float(i, ctx, a):
    if not is_number(a[0]):
        raise _badarg("float", a[0])
    return float(a[0])


def _is(pred):
    return lambda i, ctx, a: pred(a[0])


def _is_function2(i, ctx, a):
    f, n = a
    return isinstance(f, (Closure, FunRef)) and f.arity == n


def _operator(op: str):
    return lambda i, ctx, a: binop(op, a[0], a[1])


def _logic(op: str):
    def fn(i, ctx, a):
        x, y = _bool(op, a[0]), _bool(op, a[1])
        return (x and y) if op == "and" else (x or y) if op == "or" else (x != y)
    return fn


# ---------------------------------------------------------------- pure: lists


def _nth(i, ctx, a):
    n, lst = a
    if not is_integer(n) or not isinstance(lst, list) or not 1 <= n <= len(lst):
        raise EvalError("function_clause", f"lists:nth({format_value(n)},{format_value(lst)})")
    return lst[n - 1]


def _predicate_result(fn_name: str, v: Any) -> bool:
    if v is True or v is False:
        return v
    raise _badarg(fn_name, v)


def _all(i, ctx, a):
    f, lst = a
    return all(_predicate_result("lists:all", i.apply(ctx, f, [x])) for x in _list_arg("lists:all", lst))


def _any(i, ctx, a):
    f, lst = a
    return any(_predicate_result("lists:any", i.apply(ctx, f, [x])) for x in _list_arg("lists:any", lst))


def _map(i, ctx, a):
    f, lst = a
    return [i.apply(ctx, f, [x]) for x in _list_arg("lists:map", lst)]


def _filter(i, ctx, a):
    f, lst = a
    return [x for x in _list_arg("lists:filter", lst)
            if _predicate_result("lists:filter", i.apply(ctx, f, [x]))]


def _foldl(i, ctx, a):
    f, acc, lst = a
    for x in _list_arg("lists:foldl", lst):
        acc = i.apply(ctx, f, [x, acc])
    return acc


def _foldr(i, ctx, a):
    f, acc, lst = a
    for x in reversed(_list_arg("lists:foldr", lst)):
        acc = i.apply(ctx, f, [x, acc])
    return acc


def _sum(i, ctx, a):
    total: Any = 0
    for x in _list_arg("lists:sum", a[0]):
        total = binop("+", total, x)
    return total


def _reverse(i, ctx, a):
    return list(reversed(_list_arg("lists:reverse", a[0])))


def _seq(i, ctx, a):
    lo, hi = _int_arg("lists:seq", a[0]), _int_arg("lists:seq", a[1])
    return list(range(lo, hi + 1))


def _member(i, ctx, a):
    x, lst = a
    return any(term_eq(x, y, exact=True) for y in _list_arg("lists:member", lst))


def _sort(i, ctx, a):
    return sorted(_list_arg("lists:sort", a[0]), key=functools.cmp_to_key(term_compare))


def _last(i, ctx, a):
    lst = _list_arg("lists:last", a[0])
    if not lst:
        raise EvalError("function_clause", "lists:last([])")
    return lst[-1]


def _lists_ext(pick_max: bool):
    def fn(i, ctx, a):
        lst = _list_arg("lists:max" if pick_max else "lists:min", a[0])
        if not lst:
            raise EvalError("function_clause", "empty list")
        best = lst[0]
        for x in lst[1:]:
            c = term_compare(x, best)
            if (c > 0) if pick_max else (c < 0):
                best = x
        return best
    return fn


def _append2(i, ctx, a):
    return binop("++", a[0], a[1])


def _duplicate(i, ctx, a):
    return [a[1]] * _int_arg("lists:duplicate", a[0])


# ---------------------------------------------------------------- impure


def _put(i, ctx, a):
    k, v = a
    d = ctx.process.dictionary
    old = d.get(_key(k), (None, UNDEFINED))[1]
    d[_key(k)] = (k, v)
    return old


def _get(i, ctx, a):
    return ctx.process.dictionary.get(_key(a[0]), (None, UNDEFINED))[1]


def _key(k: Any):
    return format_value(k)


def format_io(fmt: str, args: list) -> str:
    out = []
    args = list(args)
    k = 0
    while k < len(fmt):
        ch = fmt[k]
        if ch == "~" and k + 1 < len(fmt):
            d = fmt[k + 1]
            k += 2
            if d == "n":
                out.append("\n")
            elif d == "~":
                out.append("~")
            elif d in "pwsb":
                if not args:
                    raise _badarg("io:format", fmt)
                v = args.pop(0)
                out.append(v if d == "s" and isinstance(v, str) else format_value(v))
            else:
                raise _badarg("io:format", fmt)
            continue
        out.append(ch)
        k += 1
    return "".join(out)


def _io_format(i, ctx, a):
    fmt = a[0]
    if not isinstance(fmt, str):
        raise _badarg("io:format", fmt)
    args = a[1] if len(a) > 1 else []
    if not isinstance(args, list):
        raise _badarg("io:format", fmt, args)
    ctx.runtime.write_out(format_io(fmt, args))
    return OK


def _sleep(i, ctx, a):
    ms = a[0]
    if not is_number(ms) or ms < 0:
        raise _badarg("timer:sleep", ms)
    ctx.abort.sleep(ms / 1000.0)
    return OK


def _self(i, ctx, a):
    return ctx.pid


def _spawn(i, ctx, a):
    ctx.forbid_messaging_check("spawn")
    fun = a[0]
    if not isinstance(fun, (Closure, FunRef)) or fun.arity != 0:
        raise _badarg("spawn", fun)
    return ctx.runtime.spawn(fun, []).pid


def _spawn3(i, ctx, a):
    ctx.forbid_messaging_check("spawn")
    m, f, args = a
    if not isinstance(m, Atom) or not isinstance(f, Atom) or not isinstance(args, list):
        raise _badarg("spawn", m, f, args)
    return ctx.runtime.spawn(FunRef(m.name, f.name, len(args)), args).pid


def _send(i, ctx, a):
    ctx.forbid_messaging_check("send")
    dest, msg = a
    if not isinstance(dest, Pid):
        raise _badarg("send", dest, msg)
    ctx.runtime.send(dest, msg)
    return msg


def _recv(i, ctx, a):
    ctx.forbid_messaging_check("receive")
    ms = a[0]
    timeout = None
    if isinstance(ms, Atom) and ms.name == "infinity":
        timeout = None
    elif is_number(ms) and ms >= 0:
        timeout = ms / 1000.0
    else:
        raise _badarg("edbc:recv", ms)
    ok, msg = ctx.process.mailbox.receive(
        match=lambda m: not _is_internal(m), timeout=timeout, abort=ctx.abort)
    return (OK, msg) if ok else Atom("timeout")


def _is_internal(msg: Any) -> bool:
    from ..server import InternalMessage

    return isinstance(msg, InternalMessage)


def _log(i, ctx, a):
    v = a[0]
    ctx.runtime.write_log(v if isinstance(v, str) else format_value(v))
    return OK


def _uniform(i, ctx, a):
    n = _int_arg("rand:uniform", a[0])
    if n < 1:
        raise _badarg("rand:uniform", n)
    return ctx.runtime.random_int(1, n)


def _server_start(i, ctx, a):
    from ..server import server_start_builtin

    ctx.forbid_messaging_check("server_start")
    return server_start_builtin(i, ctx, a)


def _server_call(i, ctx, a):
    from ..server import server_call_builtin

    ctx.forbid_messaging_check("server_call")
    return server_call_builtin(i, ctx, a)


def _server_cast(i, ctx, a):
    from ..server import server_cast_builtin

    ctx.forbid_messaging_check("server_cast")
    return server_cast_builtin(i, ctx, a)


# ---------------------------------------------------------------- table


def default_table() -> BuiltinTable:
    t = BuiltinTable()
    pure_auto = [
        ("length", 1, _length), ("hd", 1, _hd), ("tl", 1, _tl),
        ("element", 2, _element), ("setelement", 3, _setelement),
        ("tuple_size", 1, _tuple_size), ("abs", 1, _abs),
        ("min", 2, _minmax(False)), ("max", 2, _minmax(True)),
        ("integer_to_list", 1, _integer_to_list), ("atom_to_list", 1, _atom_to_list),
        ("list_to_atom", 1, _list_to_atom),
        ("round", 1, _round), ("trunc", 1, _trunc), ("float", 1, _float),
        ("is_integer", 1, _is(is_integer)),
        ("is_float", 1, _is(lambda v: isinstance(v, float))),
        ("is_number", 1, _is(is_number)),
        ("is_atom", 1, _is(lambda v: isinstance(v, (Atom, bool)))),
        ("is_boolean", 1, _is(lambda v: isinstance(v, bool))),
        ("is_list", 1, _is(lambda v: isinstance(v, list))),
        ("is_tuple", 1, _is(lambda v: isinstance(v, tuple))),
        ("is_pid", 1, _is(lambda v: isinstance(v, Pid))),
        ("is_function", 1, _is(lambda v: isinstance(v, (Closure, FunRef)))),
        ("is_function", 2, _is_function2),
        ("is_string", 1, _is(lambda v: isinstance(v, str))),
    ]
    for name, arity, fn in pure_auto:
        t.add("erlang", name, arity, fn, auto_import=True)
    for op in ("+", "-", "*", "/", "div", "rem", "==", "/=", "=:=", "=/=", "<", "=<", ">", ">=",
               "++", "--"):
        t.add("erlang", op, 2, _operator(op))
    for op in ("and", "or", "xor"):
        t.add("erlang", op, 2, _logic(op))
    t.add("erlang", "not", 1, lambda i, ctx, a: not _bool("not", a[0]))

    lists = [
        ("nth", 2, _nth), ("all", 2, _all), ("any", 2, _any), ("map", 2, _map),
        ("filter", 2, _filter), ("foldl", 3, _foldl), ("foldr", 3, _foldr),
        ("sum", 1, _sum), ("reverse", 1, _reverse), ("seq", 2, _seq),
        ("member", 2, _member), ("sort", 1, _sort), ("last", 1, _last),
        ("max", 1, _lists_ext(True)), ("min", 1, _lists_ext(False)),
        ("append", 2, _append2), ("duplicate", 2, _duplicate),
    ]
    for name, arity, fn in lists:
        t.add("lists", name, arity, fn)

    impure_auto = [
        ("put", 2, _put), ("get", 1, _get), ("self", 0, _self),
        ("spawn", 1, _spawn), ("spawn", 3, _spawn3), ("send", 2, _send),
    ]
    for name, arity, fn in impure_auto:
        t.add("erlang", name, arity, fn, pure=False, auto_import=True)
    t.add("io", "format", 1, _io_format, pure=False)
    t.add("io", "format", 2, _io_format, pure=False)
    t.add("timer", "sleep", 1, _sleep, pure=False)
    t.add("rand", "uniform", 1, _uniform, pure=False)
    t.add("edbc", "log", 1, _log, pure=False)
    t.add("edbc", "recv", 1, _recv, pure=False)
    t.add("edbc", "server_start", 1, _server_start, pure=False, auto_import=True)
    t.add("edbc", "server_start", 2, _server_start, pure=False, auto_import=True)
    t.add("edbc", "server_call", 2, _server_call, pure=False, auto_import=True)
    t.add("edbc", "server_cast", 2, _server_cast, pure=False, auto_import=True)

    from .contracts import register_contract_builtins

    register_contract_builtins(t)
    return t

