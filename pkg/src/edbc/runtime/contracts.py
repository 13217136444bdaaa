"""Runtime side of the contracts: the functions instrumented code calls.

Instrumented modules call ``edbc_put_info/2``, ``edbc_pre/2``,
``edbc_post/2``, ``edbc_decrease_check/5`` and ``edbc_state/1``. Lowered
contracts reach ``edbc_pre``/``edbc_post`` as ``{Tag, Fun}`` pairs so that
time, purity, spec and invariant checks share the two entry points.
"""
from __future__ import annotations

import functools
import threading
import time
from typing import Any, Optional

from .. import report
from ..errors import Aborted, EvalError
from ..typespec import TypeSpec, parse_typespec, type_check
from ..values import Atom, Closure, FunRef, format_value, is_integer, is_number
from ..violation import CallInfo, CheckOutcome, Violation
from .process import AbortToken, EvalContext, PurityTrace

_REPLY = Atom("reply")
_NOREPLY = Atom("noreply")


@functools.lru_cache(maxsize=None)
def _typespec(text: str) -> TypeSpec:
    return parse_typespec(text)


def _current_call(ctx: EvalContext) -> CallInfo:
    top = ctx.top_call()
    return top if top is not None else CallInfo(ctx.module or "", "?", ())


def _split(cond: Any, default: str) -> tuple[str, Any]:
    if isinstance(cond, tuple) and len(cond) == 2 and isinstance(cond[0], Atom):
        return cond[0].name, cond[1]
    if isinstance(cond, (Closure, FunRef)):
        return default, cond
    raise EvalError("bad_contract_return", f"not a contract function: {format_value(cond)}")


def outcome(v: Any) -> CheckOutcome:
    """Booleans and ``{Bool, Reason}`` pairs are the two accepted shapes."""
    if v is True or v is False:
        return CheckOutcome(v)
    if isinstance(v, tuple) and len(v) == 2 and isinstance(v[0], bool):
        reason = v[1] if isinstance(v[1], str) else format_value(v[1])
        return CheckOutcome(v[0], reason)
    raise EvalError("bad_contract_return", format_value(v))


def evaluate_condition(i, ctx: EvalContext, fun: Any, args: list) -> Any:
    """Apply a condition function with purity tracing switched off."""
    ctx.suspended += 1
    try:
        return i.apply(ctx, fun, args)
    finally:
        ctx.suspended -= 1


def _check(i, ctx: EvalContext, fun: Any, args: list) -> CheckOutcome:
    try:
        value = evaluate_condition(i, ctx, fun, args)
    except EvalError as e:
        if e.reason == "bad_contract_return":
            raise
        return CheckOutcome(False, f"the contract raised {e}")
    return outcome(value)


def _time_budget(i, ctx: EvalContext, fun: Any) -> float:
    ms = evaluate_condition(i, ctx, fun, [])
    if not is_number(ms) or ms < 0:
        raise EvalError("bad_contract_return", f"expected a non-negative time, got {format_value(ms)}")
    return ms


# ---------------------------------------------------------------- entry points


def put_info(i, ctx: EvalContext, args: list) -> Any:
    name, call_args = args
    ctx.callinfo.append(CallInfo(ctx.module or "", name.name, tuple(call_args)))
    return True


def pre(i, ctx: EvalContext, args: list) -> Any:
    cond, delayed = args
    tag, fun = _split(cond, "pre")
    call = _current_call(ctx)
    if tag == "pre":
        out = _check(i, ctx, fun, [])
        if not out.holds:
            raise Violation("precondition", report.condition_message("precondition", call, out.reason),
                            call, out.reason)
        return i.apply(ctx, delayed, [])
    if tag == "spec":
        checks = evaluate_condition(i, ctx, fun, [])
        for value, type_text in checks:
            if not type_check(value, _typespec(type_text)):
                raise Violation("spec_pre", report.spec_message("pre", call, value, type_text), call,
                                details={"value": value, "type": type_text})
        return i.apply(ctx, delayed, [])
    if tag == "expected_time":
        return expected_time_check(i, ctx, call, _time_budget(i, ctx, fun), delayed)
    if tag == "timeout":
        return timeout_check(i, ctx, call, _time_budget(i, ctx, fun), delayed)
    if tag == "pure":
        return purity_check(i, ctx, call, delayed)
    raise EvalError("bad_contract_return", f"unknown precondition tag {tag}")


def post(i, ctx: EvalContext, args: list) -> Any:
    cond, delayed = args
    tag, fun = _split(cond, "post")
    result = i.apply(ctx, delayed, [])
    call = _current_call(ctx)
    if tag == "post":
        out = _check(i, ctx, fun, [result])
        if not out.holds:
            raise Violation("postcondition", report.condition_message("postcondition", call, out.reason),
                            call, out.reason, details={"result": result})
        return result
    if tag == "spec":
        value, type_text = evaluate_condition(i, ctx, fun, [result])
        if not type_check(value, _typespec(type_text)):
            raise Violation("spec_post", report.spec_message("post", call, value, type_text), call,
                            details={"value": value, "type": type_text})
        return result
    if tag == "invariant":
        out = _check(i, ctx, fun, [result])
        if not out.holds:
            raise Violation("invariant", report.invariant_message(call, result, out.reason), call,
                            out.reason, details={"result": result, "state": state_of(result)})
        return result
    raise EvalError("bad_contract_return", f"unknown postcondition tag {tag}")


def measure(v: Any) -> int:
    if is_integer(v):
        return v
    if isinstance(v, (list, str)):
        return len(v)
    raise EvalError("not_measurable", format_value(v))


def decreased(prev: list, nxt: list, strict: bool) -> bool:
    for p, n in zip(prev, nxt):
        mp, mn = measure(p), measure(n)
        if not (mn < mp if strict else mn <= mp):
            return False
    return True


def decrease_check(i, ctx: EvalContext, args: list) -> Any:
    prev, nxt, strict, next_all, delayed = args
    if len(prev) != len(nxt):
        raise EvalError("badarg", "decreasing argument lists differ in length")
    if not decreased(prev, nxt, strict):
        call = ctx.top_call()
        name = call.name if call is not None else "?"
        prev_args = call.args if call is not None else tuple(prev)
        raise Violation("decrease", report.decrease_message(name, prev_args, next_all), call,
                        details={"previous": list(prev), "next": list(nxt), "strict": strict})
    return i.apply(ctx, delayed, [])


def state_of(result: Any) -> Any:
    """The state inside a callback result (the whole value for init)."""
    if isinstance(result, tuple) and len(result) >= 2 and result[0] in (_REPLY, _NOREPLY):
        return result[-1]
    return result


# ---------------------------------------------------------------- time and purity


def expected_time_check(i, ctx: EvalContext, call: CallInfo, expected_ms: float, delayed: Any) -> Any:
    start = time.perf_counter()
    result = i.apply(ctx, delayed, [])
    real_ms = (time.perf_counter() - start) * 1000.0
    if real_ms > expected_ms + ctx.runtime.config.slack_ms:
        raise Violation("expected_time", report.expected_time_message(call, real_ms, expected_ms), call,
                        details={"real_ms": real_ms, "expected_ms": expected_ms})
    return result


def timeout_check(i, ctx: EvalContext, call: CallInfo, budget_ms: float, delayed: Any) -> Any:
    token = AbortToken(parent=ctx.abort)
    strand = ctx.strand(token)
    box: dict[str, Any] = {}
    done = threading.Event()

    def run() -> None:
        try:
            box["value"] = i.apply(strand, delayed, [])
        except Aborted:
            box["aborted"] = True
        except BaseException as e:  # handed back to the waiting strand
            box["error"] = e
        finally:
            done.set()

    ctx.runtime.start_thread(run, f"timeout-{call.name}")
    deadline = time.monotonic() + (budget_ms + ctx.runtime.config.slack_ms) / 1000.0
    while not done.is_set():
        left = deadline - time.monotonic()
        if left <= 0:
            break
        done.wait(min(left, 0.01))
        if ctx.abort.is_set():
            token.abort()
            raise Aborted()
    if not done.is_set():
        token.abort()
        raise Violation("timeout", report.timeout_message(call, budget_ms), call,
                        details={"budget_ms": budget_ms})
    if "error" in box:
        raise box["error"]
    if box.get("aborted"):
        raise Aborted()
    return box["value"]


def purity_check(i, ctx: EvalContext, call: CallInfo, delayed: Any) -> Any:
    trace = PurityTrace(call)
    ctx.traces.append(trace)
    saved = ctx.suspended
    ctx.suspended = 0
    try:
        result = i.apply(ctx, delayed, [])
    finally:
        ctx.suspended = saved
        ctx.traces.remove(trace)
    if trace.events:
        first = trace.events[0]
        raise Violation("purity", report.purity_message(call, first), call,
                        details={"events": list(trace.events)})
    return result


def register_contract_builtins(table) -> None:
    table.add("edbc", "edbc_put_info", 2, put_info, auto_import=True)
    table.add("edbc", "edbc_pre", 2, pre, auto_import=True)
    table.add("edbc", "edbc_post", 2, post, auto_import=True)
    table.add("edbc", "edbc_decrease_check", 5, decrease_check, auto_import=True)
    table.add("edbc", "edbc_state", 1, lambda i, ctx, a: state_of(a[0]), auto_import=True)


def check_outcome(v: Any) -> Optional[str]:
    """None when ``v`` reports success, else the failure reason (possibly empty)."""
    out = outcome(v)
    return None if out.holds else (out.reason or "")
