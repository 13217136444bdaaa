"""Report templates for contract violations and server terminations."""
from __future__ import annotations

from typing import Any, Optional

from .errors import EvalError
from .values import Atom, format_args, format_atom, format_value
from .violation import CallInfo, ServerTermination, Violation

_REPLY_TAGS = (Atom("reply"), Atom("noreply"))


def call_text(call: CallInfo, with_module: bool = True) -> str:
    head = format_atom(call.name)
    if with_module:
        head = f"{format_atom(call.module)}:{head}"
    return f"{head}({format_args(call.args)})"


def _with_reason(text: str, reason: Optional[str]) -> str:
    return text if reason is None else f"{text} Reason: {reason}"


def format_ms(x: float) -> str:
    if isinstance(x, int) or float(x).is_integer():
        return str(int(x))
    return f"{x:.3f}"


# ---------------------------------------------------------------- messages


def condition_message(kind: str, call: CallInfo, reason: Optional[str] = None) -> str:
    return _with_reason(f"The {kind} does not hold. Last call: {call_text(call)}.", reason)


def decrease_message(name: str, prev_args, next_args) -> str:
    prev = f"{format_atom(name)}({format_args(prev_args)})"
    nxt = f"{format_atom(name)}({format_args(next_args)})"
    return f"Decreasing condition does not hold. Previous call: {prev}. Current call: {nxt}."


def purity_message(call: CallInfo, bif: tuple[str, str, int]) -> str:
    m2, f2, a = bif
    return (
        f"The function is not pure. Last call: {call_text(call)}. "
        f"It has call the impure BIF {format_atom(m2)}:{format_atom(f2)}/{a} "
        f"when evaluating {call_text(call, with_module=False)}."
    )


def spec_message(which: str, call: CallInfo, value: Any, type_text: str) -> str:
    return (
        f"The spec {which}condition does not hold. Last call: {call_text(call)}. "
        f"The value {format_value(value)} is not of type {type_text}."
    )


def expected_time_message(call: CallInfo, real_ms: float, expected_ms: float) -> str:
    diff = real_ms - expected_ms
    return (
        f"The execution of {call_text(call)} took too much time. "
        f"Real: {real_ms:.3f} ms. Expected: {format_ms(expected_ms)} ms. "
        f"Difference: {diff:.3f} ms)"
    )


def timeout_message(call: CallInfo, budget_ms: float) -> str:
    return f"The execution of {call_text(call)} exceeded the timeout of {format_ms(budget_ms)} ms."


def _callback_args(call: CallInfo) -> str:
    args = [format_value(a) for a in call.args]
    if call.name == "handle_call" and len(args) == 3:
        args[1] = "..."
    return ", ".join(args)


def format_result(result: Any) -> str:
    """Callback results print as ``{reply, pass,{state,1,true}}``."""
    if isinstance(result, tuple) and len(result) >= 2 and result[0] in _REPLY_TAGS:
        rest = ",".join(format_value(x) for x in result[1:])
        return "{" + f"{format_value(result[0])}, {rest}" + "}"
    return format_value(result)


def invariant_message(call: CallInfo, result: Any, reason: Optional[str] = None) -> str:
    lines = [
        "The invariant does not hold.",
        f"Last call: {format_atom(call.module)}:{format_atom(call.name)}({_callback_args(call)}).",
        f"Result: {format_result(result)}",
    ]
    if reason is not None:
        lines.append(f"Reason: {reason}")
    return "\n".join(lines)


# ---------------------------------------------------------------- rendering


def format_violation(v: Violation) -> str:
    return v.message


def format_error(e: BaseException) -> str:
    if isinstance(e, Violation):
        return format_violation(e)
    if isinstance(e, EvalError):
        if isinstance(e.cause, Violation):
            return f"{e}\n{format_violation(e.cause)}"
        return f"** exception error: {e}"
    return f"** {type(e).__name__}: {e}"


def termination_report(t: ServerTermination) -> str:
    return "\n".join([
        "=ERROR REPORT====",
        f"** Generic server {t.server} terminating",
        f"** Last message in was {format_value(t.last_message)}",
        f"** When Server state == {format_value(t.state)}",
        "** Reason for termination ==",
        f"** {format_error(t.reason)}",
    ])


def crash_report(pid: Any, reason: BaseException) -> str:
    # a client of a dead server names the server; its own report already has the details
    text = str(reason) if isinstance(reason, EvalError) and reason.cause is not None \
        else format_error(reason)
    return f"=ERROR REPORT==== Error in process {pid!r} with exit value: {text}"
