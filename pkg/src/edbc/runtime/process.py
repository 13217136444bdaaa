"""Processes, mailboxes and per-strand evaluation state.

Every mini-language process runs on its own Python thread. Processes share
nothing mutable: they talk through FIFO mailboxes. A process may open extra
strands (for ?TIMEOUT) which share its identity, mailbox and dictionary but
carry their own abort token and call-info stack.
"""
from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..errors import Aborted, EvalError
from ..values import Pid
from ..violation import CallInfo

POLL = 0.01  # seconds between abort checks while blocked


class AbortToken:
    """Cooperative cancellation flag; aborting a parent aborts its children."""

    def __init__(self, parent: Optional["AbortToken"] = None):
        self.parent = parent
        self._set = False

    def abort(self) -> None:
        self._set = True

    def is_set(self) -> bool:
        tok: Optional[AbortToken] = self
        while tok is not None:
            if tok._set:
                return True
            tok = tok.parent
        return False

    @property
    def cancellable(self) -> bool:
        return self.parent is not None or self._set

    def check(self) -> None:
        if self.is_set():
            raise Aborted()

    def sleep(self, seconds: float) -> None:
        deadline = time.monotonic() + seconds
        while True:
            self.check()
            left = deadline - time.monotonic()
            if left <= 0:
                return
            time.sleep(min(left, POLL) if self.cancellable else left)


class Mailbox:
    def __init__(self) -> None:
        self._items: deque = deque()
        self._cv = threading.Condition()
        self.waiting = False

    def put(self, msg: Any) -> None:
        with self._cv:
            self._items.append(msg)
            self._cv.notify_all()

    def __len__(self) -> int:
        with self._cv:
            return len(self._items)

    def snapshot(self) -> list:
        with self._cv:
            return list(self._items)

    def receive(self, match: Optional[Callable[[Any], bool]] = None,
                timeout: Optional[float] = None,
                abort: Optional[AbortToken] = None,
                alive: Optional[Callable[[], bool]] = None) -> tuple[bool, Any]:
        """Remove and return the first message accepted by ``match``.

        Returns ``(False, None)`` on timeout. ``alive`` is polled while
        blocked; when it turns false the wait ends as a timeout.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cv:
            while True:
                for i, msg in enumerate(self._items):
                    if match is None or match(msg):
                        del self._items[i]
                        return True, msg
                if abort is not None and abort.is_set():
                    raise Aborted()
                if alive is not None and not alive():
                    return False, None
                wait = None
                if deadline is not None:
                    wait = deadline - time.monotonic()
                    if wait <= 0:
                        return False, None
                if (abort is not None and abort.cancellable) or alive is not None:
                    wait = POLL * 5 if wait is None else min(wait, POLL * 5)
                    if abort is not None and abort.cancellable:
                        wait = min(wait, POLL)
                self.waiting = True
                try:
                    self._cv.wait(wait)
                finally:
                    self.waiting = False

    def wait_for_growth(self, size: int, abort: Optional[AbortToken] = None) -> None:
        """Block until the mailbox holds more than ``size`` messages."""
        with self._cv:
            while len(self._items) <= size:
                if abort is not None and abort.is_set():
                    raise Aborted()
                self.waiting = True
                try:
                    self._cv.wait(POLL * 5)
                finally:
                    self.waiting = False

    def replace(self, items) -> None:
        with self._cv:
            self._items = deque(items)
            self._cv.notify_all()


@dataclass
class PurityTrace:
    """Impure events seen while a ?PURE call is running."""

    call: Optional[CallInfo]
    events: list = field(default_factory=list)


class Process:
    def __init__(self, runtime, name: str = "", kind: str = "process"):
        self.pid = Pid()
        self.runtime = runtime
        self.name = name
        self.kind = kind  # process | server | native
        self.mailbox = Mailbox()
        self.dictionary: dict = {}
        self.thread: Optional[threading.Thread] = None
        self.done = threading.Event()
        self.result: Any = None
        self.error: Optional[BaseException] = None
        self.abort = AbortToken()

    @property
    def alive(self) -> bool:
        return not self.done.is_set()

    def finish(self, result: Any = None, error: Optional[BaseException] = None) -> None:
        if self.done.is_set():
            return
        self.result = result
        self.error = error
        self.done.set()

    def __repr__(self) -> str:
        return f"Process({self.pid!r}, {self.name or self.kind})"


class EvalContext:
    """State of one evaluation strand."""

    def __init__(self, process: Process, abort: Optional[AbortToken] = None,
                 module: Optional[str] = None):
        self.process = process
        self.runtime = process.runtime
        self.abort = abort or process.abort
        self.module = module
        self.callinfo: list[CallInfo] = []
        self.traces: list[PurityTrace] = []
        self.suspended = 0  # >0 while a contract condition is evaluated
        self.no_messaging = 0  # >0 inside cpre
        self.depth = 0
        self.tracer: Optional[Callable[[str, str, int], None]] = process.runtime.tracer

    @property
    def pid(self) -> Pid:
        return self.process.pid

    def strand(self, abort: AbortToken) -> "EvalContext":
        child = EvalContext(self.process, abort, self.module)
        child.callinfo = list(self.callinfo)
        child.traces = self.traces
        child.suspended = self.suspended
        child.no_messaging = self.no_messaging
        child.depth = self.depth
        child.tracer = self.tracer
        return child

    @property
    def tracing(self) -> bool:
        return bool(self.traces) and not self.suspended

    def note_impure(self, module: str, name: str, arity: int) -> None:
        if self.traces and not self.suspended:
            for t in self.traces:
                t.events.append((module, name, arity))

    def forbid_messaging_check(self, what: str) -> None:
        if self.no_messaging:
            raise EvalError("badarg", f"{what} is not allowed inside cpre/3")

    def top_call(self) -> Optional[CallInfo]:
        return self.callinfo[-1] if self.callinfo else None
