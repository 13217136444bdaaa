"""Request/reply servers whose synchronous requests are gated by ``cpre/3``.

A server owns its state and three request queues. Each scheduling decision
is made by :func:`serve_loop_step`, which takes the mailbox as any object
with ``popleft``/``append`` so it can be driven by a plain deque in tests
and by the live process mailbox at runtime.

Deferred requests are handled by one of two policies:

* ``resend`` posts the request back to the tail of the server's mailbox.
* ``fair`` keeps it in ``queue_old`` (when it came from ``queue_current``)
  or ``queue_new`` (when it came from the mailbox); after a served request
  changes the state, ``queue_current`` becomes old ++ current ++ new.
"""
from __future__ import annotations

import enum
import itertools
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import report
from .errors import EvalError
from .runtime.contracts import check_outcome
from .runtime.process import EvalContext, Process
from .values import Atom, OK, Pid, format_value, term_eq
from .violation import CallInfo, ServerTermination, Violation

REPLY = Atom("reply")
NOREPLY = Atom("noreply")

_tags = itertools.count(1)


class ServerPolicy(str, enum.Enum):
    RESEND = "resend"
    FAIR = "fair"

    @classmethod
    def parse(cls, value: Any) -> "ServerPolicy":
        if isinstance(value, ServerPolicy):
            return value
        name = value.name if isinstance(value, Atom) else str(value)
        try:
            return cls(name)
        except ValueError:
            raise EvalError("badarg", f"unknown server policy {name}") from None


# ---------------------------------------------------------------- messages


class InternalMessage:
    """Protocol messages; user-level receives never see them."""


@dataclass(frozen=True)
class From:
    pid: Pid
    tag: int

    @property
    def value(self) -> tuple:
        return (self.pid, self.tag)


@dataclass(eq=False)
class RequestEnvelope(InternalMessage):
    request: Any
    sender: From
    origin: str = "mailbox"  # or queue_current


@dataclass(eq=False)
class CastMessage(InternalMessage):
    request: Any


@dataclass(eq=False)
class StopMessage(InternalMessage):
    reason: Any = Atom("normal")


@dataclass(eq=False)
class Reply(InternalMessage):
    tag: int
    value: Any


@dataclass(eq=False)
class ServerDown(InternalMessage):
    tag: int
    reason: BaseException


# ---------------------------------------------------------------- state


@dataclass
class ServerQueues:
    current: deque = field(default_factory=deque)
    old: deque = field(default_factory=deque)
    new: deque = field(default_factory=deque)

    def rebuild(self) -> None:
        self.current = deque([*self.old, *self.current, *self.new])
        self.old.clear()
        self.new.clear()

    def defer(self, env: RequestEnvelope) -> None:
        (self.old if env.origin == "queue_current" else self.new).append(env)

    def pending(self) -> list[RequestEnvelope]:
        return [*self.old, *self.current, *self.new]

    def __len__(self) -> int:
        return len(self.old) + len(self.current) + len(self.new)


@dataclass
class ServerCallbacks:
    """Callback set of one server. ``from`` arguments are ``(Pid, Tag)`` tuples."""

    name: str
    init: Callable[[], Any]
    handle_call: Callable[[Any, Any, Any], Any]
    handle_cast: Optional[Callable[[Any, Any], Any]] = None
    cpre: Optional[Callable[[Any, Any, Any], Any]] = None
    invariant: Optional[Callable[[Any], Any]] = None


@dataclass
class Step:
    action: str  # reply | noreply | deferred | cast | stop | ignored
    message: Any = None
    reply: Any = None


class ServerCrash(Exception):
    def __init__(self, message: Any, state: Any, cause: BaseException):
        self.message = message
        self.state = state
        self.cause = cause
        super().__init__(str(cause))


def reply(value: Any, state: Any) -> tuple:
    return (REPLY, value, state)


def noreply(state: Any) -> tuple:
    return (NOREPLY, state)


# ---------------------------------------------------------------- checks


def check_invariant(callbacks: ServerCallbacks, state: Any, last_call: CallInfo,
                    result: Any = None) -> None:
    """Raise a Violation when the invariant callback rejects ``state``."""
    if callbacks.invariant is None:
        return
    reason = check_outcome(callbacks.invariant(state))
    if reason is not None:
        reason = reason or None
        shown = state if result is None else result
        raise Violation("invariant", report.invariant_message(last_call, shown, reason), last_call,
                        reason, details={"state": state, "result": shown})


def _run_cpre(callbacks: ServerCallbacks, env: RequestEnvelope, state: Any) -> tuple[bool, Any]:
    if callbacks.cpre is None:
        return True, state
    out = callbacks.cpre(env.request, env.sender.value, state)
    if not (isinstance(out, tuple) and len(out) == 2 and isinstance(out[0], bool)):
        raise EvalError("bad_return_value", f"cpre/3 returned {format_value(out)}")
    return out


def _call_result(out: Any) -> tuple[str, Any, Any]:
    if isinstance(out, tuple):
        if len(out) == 3 and out[0] is REPLY:
            return "reply", out[1], out[2]
        if len(out) == 2 and out[0] is NOREPLY:
            return "noreply", None, out[1]
    raise EvalError("bad_return_value", format_value(out))


def _changed(a: Any, b: Any) -> bool:
    return not term_eq(a, b, exact=True)


def serve_loop_step(policy: ServerPolicy, queues: ServerQueues, mailbox, state: Any,
                    callbacks: ServerCallbacks) -> tuple[Step, ServerQueues, Any]:
    """Make one scheduling decision.

    Raises IndexError when there is nothing to do and the mailbox is a
    plain deque, and ServerCrash when a callback fails.
    """
    if policy is ServerPolicy.FAIR and queues.current:
        env = queues.current.popleft()
        env.origin = "queue_current"
    else:
        msg = mailbox.popleft()
        if isinstance(msg, StopMessage):
            return Step("stop", msg), queues, state
        if isinstance(msg, CastMessage):
            try:
                out = callbacks.handle_cast(msg.request, state) if callbacks.handle_cast else None
                kind, _, new_state = _call_result(out)
                if kind != "noreply":
                    raise EvalError("bad_return_value", format_value(out))
                check_invariant(callbacks, new_state,
                                CallInfo(callbacks.name, "handle_cast", (msg.request, state)), out)
            except (Violation, EvalError) as e:
                raise ServerCrash(msg.request, state, e) from e
            if policy is ServerPolicy.FAIR and _changed(state, new_state):
                queues.rebuild()
            return Step("cast", msg), queues, new_state
        if not isinstance(msg, RequestEnvelope):
            return Step("ignored", msg), queues, state
        env = msg
        env.origin = "mailbox"
    try:
        ok, gated_state = _run_cpre(callbacks, env, state)
    except (Violation, EvalError) as e:
        raise ServerCrash(env.request, state, e) from e
    if not ok:
        if policy is ServerPolicy.FAIR:
            queues.defer(env)
        else:
            mailbox.append(env)
        return Step("deferred", env), queues, gated_state
    try:
        out = callbacks.handle_call(env.request, env.sender.value, gated_state)
        kind, value, new_state = _call_result(out)
        check_invariant(callbacks, new_state,
                        CallInfo(callbacks.name, "handle_call", (env.request, env.sender.value, gated_state)),
                        out)
    except (Violation, EvalError) as e:
        raise ServerCrash(env.request, gated_state, e) from e
    if policy is ServerPolicy.FAIR and _changed(state, new_state):
        queues.rebuild()
    return Step(kind, env, value), queues, new_state


# ---------------------------------------------------------------- live server


class _LiveMailbox:
    """Adapter giving the process mailbox the deque interface.

    Under the resend policy a request that was just deferred would be taken
    again at once when nothing else is waiting. Such requests are remembered
    until the state changes; when the mailbox holds nothing else the server
    waits for a new message instead of re-running cpre on the same state.
    """

    def __init__(self, proc: Process, ctx: EvalContext):
        self.proc = proc
        self.ctx = ctx
        self.stale: set[int] = set()

    def popleft(self) -> Any:
        mb = self.proc.mailbox
        while True:
            items = mb.snapshot()
            if items and all(id(m) in self.stale for m in items):
                mb.wait_for_growth(len(items), self.ctx.abort)
                continue
            ok, msg = mb.receive(abort=self.ctx.abort)
            if ok:
                return msg

    def append(self, msg: Any) -> None:
        self.stale.add(id(msg))
        self.proc.mailbox.put(msg)

    def state_changed(self) -> None:
        self.stale.clear()


class Server:
    """Handle on a running server process."""

    def __init__(self, runtime, proc: Process, policy: ServerPolicy):
        self.runtime = runtime
        self.proc = proc
        self.policy = policy
        self.queues = ServerQueues()
        self.state: Any = None
        self.served: list[Any] = []
        self.observers: list[Callable[[Any], None]] = []
        self._hold = threading.Event()
        self._hold.set()
        self.termination: Optional[ServerTermination] = None

    @property
    def pid(self) -> Pid:
        return self.proc.pid

    @property
    def alive(self) -> bool:
        return self.proc.alive

    def release(self) -> None:
        self._hold.set()

    def stop(self, timeout: float = 5.0) -> None:
        if self.proc.alive:
            self.proc.mailbox.put(StopMessage())
            self.proc.done.wait(timeout)


def _notify_down(runtime, pending, reason: BaseException) -> None:
    for env in pending:
        if isinstance(env, RequestEnvelope):
            runtime.send(env.sender.pid, ServerDown(env.sender.tag, reason))


def _serve(server: Server, callbacks_factory, ctx: EvalContext, started: threading.Event,
           box: dict) -> Any:
    rt = server.runtime
    callbacks: ServerCallbacks = callbacks_factory(ctx)
    try:
        state = callbacks.init()
        check_invariant(callbacks, state, CallInfo(callbacks.name, "init", ()))
    except BaseException as e:
        box["error"] = e
        started.set()
        raise
    server.state = state
    started.set()
    _observe(server, state)
    server._hold.wait()
    mailbox = _LiveMailbox(server.proc, ctx)
    queues = server.queues
    while True:
        try:
            step, queues, new_state = serve_loop_step(server.policy, queues, mailbox, state, callbacks)
        except ServerCrash as crash:
            term = ServerTermination(callbacks.name, crash.message, crash.state, crash.cause)
            server.termination = term
            rt.terminations.append(term)
            rt.write_err(report.termination_report(term))
            pending = queues.pending() + server.proc.mailbox.snapshot()
            server.proc.finish(error=crash.cause)
            _notify_down(rt, pending, crash.cause)
            return None
        if step.action == "stop":
            pending = queues.pending() + server.proc.mailbox.snapshot()
            server.proc.finish(result=OK)
            _notify_down(rt, pending, EvalError("noproc", "server stopped"))
            return OK
        if step.action in ("reply", "noreply"):
            server.served.append(step.message.request)
        if step.action == "reply":
            env = step.message
            rt.send(env.sender.pid, Reply(env.sender.tag, step.reply))
        if _changed(state, new_state):
            mailbox.state_changed()
        state = new_state
        server.state = state
        server.queues = queues
        _observe(server, state)


def _observe(server: Server, state: Any) -> None:
    for obs in server.observers:
        obs(state)
    for obs in server.runtime.server_observers:
        obs(server.pid, state)


def start_server(runtime, callbacks, policy: Any = None, observer: Optional[Callable[[Any], None]] = None,
                 hold: bool = False) -> Server:
    """Start a server and wait for its ``init`` to finish.

    ``callbacks`` is a :class:`ServerCallbacks`, a loaded module name, or a
    factory taking the server's EvalContext. With ``hold`` the server does
    not look at its mailbox until :meth:`Server.release` is called.
    Errors raised by ``init`` (including an invariant violation on the
    initial state) are re-raised here.
    """
    policy = ServerPolicy.parse(policy if policy is not None else runtime.config.policy)
    if isinstance(callbacks, ServerCallbacks):
        cbs = callbacks
        factory = lambda ctx: cbs  # noqa: E731
        name = cbs.name
    elif isinstance(callbacks, str):
        factory = module_callbacks(runtime, callbacks)
        name = callbacks
    else:
        factory = callbacks
        name = getattr(callbacks, "__name__", "server")
    started = threading.Event()
    box: dict = {}
    holder: dict = {}

    def body(ctx: EvalContext) -> Any:
        return _serve(holder["server"], factory, ctx, started, box)

    # the process must exist before the server handle refers to it
    proc_ready = threading.Event()

    def gated(ctx: EvalContext) -> Any:
        proc_ready.wait()
        return body(ctx)

    proc = runtime.spawn_native(gated, name=name, kind="server", report_crash=False)
    server = Server(runtime, proc, policy)
    if observer is not None:
        server.observers.append(observer)
    if hold:
        server._hold.clear()
    holder["server"] = server
    runtime.servers[proc.pid] = server
    proc_ready.set()
    started.wait()
    if "error" in box:
        raise box["error"]
    return server


def module_callbacks(runtime, module: str) -> Callable[[EvalContext], ServerCallbacks]:
    """Callbacks backed by functions of a loaded module.

    Invariants are not set here: an instrumented module checks its own
    invariant through the wrappers around init, handle_call and handle_cast.
    """
    mod = runtime.modules.get(module)
    if mod is None:
        raise EvalError("undef", f"module {module} is not loaded")
    funs = mod.functions

    def factory(ctx: EvalContext) -> ServerCallbacks:
        interp = runtime.interp
        ctx.module = module

        def fn(name: str):
            return lambda *args: interp.call(ctx, module, name, list(args))

        if ("init", 0) in funs:
            init = fn("init")
        elif ("init", 1) in funs:
            init = lambda: interp.call(ctx, module, "init", [[]])  # noqa: E731
        else:
            raise EvalError("undef", f"{module}:init/0")
        if ("handle_call", 3) not in funs:
            raise EvalError("undef", f"{module}:handle_call/3")
        cpre = None
        if ("cpre", 3) in funs:
            raw = fn("cpre")

            def guarded(req, frm, state):
                ctx.no_messaging += 1
                try:
                    return raw(req, frm, state)
                finally:
                    ctx.no_messaging -= 1

            cpre = guarded

        return ServerCallbacks(
            name=module,
            init=init,
            handle_call=fn("handle_call"),
            handle_cast=fn("handle_cast") if ("handle_cast", 2) in funs else None,
            cpre=cpre,
        )

    return factory


# ---------------------------------------------------------------- clients


def call(runtime, caller: Process, ctx_abort, server_pid: Any, request: Any) -> Any:
    server = runtime.processes.get(server_pid) if isinstance(server_pid, Pid) else None
    if server is None or server.kind != "server":
        raise EvalError("noproc", format_value(server_pid))
    if not server.alive:
        raise EvalError("noproc", format_value(server_pid), cause=server.error)
    tag = next(_tags)
    server.mailbox.put(RequestEnvelope(request, From(caller.pid, tag)))

    def mine(m: Any) -> bool:
        return isinstance(m, (Reply, ServerDown)) and m.tag == tag

    while True:
        ok, msg = caller.mailbox.receive(match=mine, abort=ctx_abort, alive=lambda: server.alive)
        if ok:
            break
        # the server is gone; a reply may still have been posted just before
        ok, msg = caller.mailbox.receive(match=mine, timeout=0)
        if ok:
            break
        raise EvalError("server_terminated", format_value(server_pid), cause=server.error)
    if isinstance(msg, ServerDown):
        raise EvalError("server_terminated", format_value(server_pid), cause=msg.reason)
    return msg.value


def cast(runtime, server_pid: Any, request: Any) -> Any:
    server = runtime.processes.get(server_pid) if isinstance(server_pid, Pid) else None
    if server is not None and server.kind == "server" and server.alive:
        server.mailbox.put(CastMessage(request))
    return OK


class NativeClient:
    """A process driven from Python code (tests, scripts, the CLI)."""

    def __init__(self, runtime, name: str = "driver"):
        self.runtime = runtime
        self.proc = runtime.register(Process(runtime, name, kind="native"))

    @property
    def pid(self) -> Pid:
        return self.proc.pid

    def call(self, server: Any, request: Any) -> Any:
        return call(self.runtime, self.proc, self.proc.abort, _pid_of(server), request)

    def cast(self, server: Any, request: Any) -> Any:
        return cast(self.runtime, _pid_of(server), request)

    def receive(self, timeout: Optional[float] = None) -> tuple[bool, Any]:
        return self.proc.mailbox.receive(
            match=lambda m: not isinstance(m, InternalMessage), timeout=timeout)

    def close(self) -> None:
        self.proc.finish()

    def __enter__(self) -> "NativeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _pid_of(server: Any) -> Pid:
    return server.pid if isinstance(server, Server) else server


# ---------------------------------------------------------------- builtins


def server_start_builtin(interp, ctx: EvalContext, args: list) -> Pid:
    module = args[0]
    if not isinstance(module, Atom):
        raise EvalError("badarg", f"server_start({format_value(module)})")
    policy = args[1] if len(args) > 1 else None
    return start_server(ctx.runtime, module.name, policy).pid


def server_call_builtin(interp, ctx: EvalContext, args: list) -> Any:
    return call(ctx.runtime, ctx.process, ctx.abort, args[0], args[1])


def server_cast_builtin(interp, ctx: EvalContext, args: list) -> Any:
    return cast(ctx.runtime, args[0], args[1])
