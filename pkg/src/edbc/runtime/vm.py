"""The runtime: loaded modules, processes and configuration."""
from __future__ import annotations

import os
import random
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from ..errors import Aborted, EvalError
from ..instrument import InstrumentedModule, instrument_module
from ..parser import parse_module
from ..report import crash_report
from ..syntax import FunDef, ModuleAst
from ..values import Atom, Closure, FunRef, Pid
from .builtins import BuiltinTable, default_table
from .interp import Interpreter
from .process import EvalContext, Process

STACK_SIZE = 256 * 1024 * 1024
_stack_lock = threading.Lock()


@dataclass
class RuntimeConfig:
    contracts_enabled: bool = True
    slack_ms: float = 0.0
    seed: Optional[int] = None
    policy: str = "fair"
    max_depth: int = 20000
    stack_size: int = STACK_SIZE


@dataclass
class LoadedModule:
    name: str
    source: ModuleAst
    instrumented: InstrumentedModule
    functions: dict[tuple[str, int], FunDef] = field(default_factory=dict)

    @property
    def roles(self) -> dict:
        return self.instrumented.roles


def contracts_disabled_by_env() -> bool:
    return os.environ.get("EDBC_NO_CONTRACTS", "") not in ("", "0")


class Runtime:
    def __init__(self, config: Optional[RuntimeConfig] = None,
                 out: Optional[Callable[[str], None]] = None,
                 err: Optional[Callable[[str], None]] = None,
                 log: Optional[Callable[[str], None]] = None,
                 tracer: Optional[Callable[[str, str, int], None]] = None):
        self.config = config or RuntimeConfig()
        self.modules: dict[str, LoadedModule] = {}
        self.builtins: BuiltinTable = default_table()
        self.interp = Interpreter(self)
        self.processes: dict[Pid, Process] = {}
        self.tracer = tracer
        self._out = out
        self._err = err
        self._log = log
        self._io_lock = threading.Lock()
        self._proc_lock = threading.Lock()
        self._rng = random.Random(self.config.seed)
        self._rng_lock = threading.Lock()
        self.terminations: list = []
        self.crashes: list[tuple[Pid, BaseException]] = []
        self.server_observers: list[Callable[[Pid, Any], None]] = []
        self.servers: dict = {}
        if sys.getrecursionlimit() < 1_000_000:
            sys.setrecursionlimit(1_000_000)

    # -- modules

    def load_source(self, source: str) -> LoadedModule:
        return self.load_module(parse_module(source))

    def load_file(self, path: str | Path) -> LoadedModule:
        return self.load_source(Path(path).read_text(encoding="utf-8"))

    def load_module(self, module: ModuleAst) -> LoadedModule:
        inst = instrument_module(module, enabled=self.config.contracts_enabled)
        loaded = LoadedModule(module.name, module, inst, {f.key: f for f in inst.fundefs})
        self.modules[module.name] = loaded
        return loaded

    # -- io

    def write_out(self, text: str) -> None:
        with self._io_lock:
            if self._out is not None:
                self._out(text)
            else:
                sys.stdout.write(text)
                sys.stdout.flush()

    def write_err(self, text: str) -> None:
        with self._io_lock:
            if self._err is not None:
                self._err(text)
            else:
                sys.stderr.write(text if text.endswith("\n") else text + "\n")
                sys.stderr.flush()

    def write_log(self, text: str) -> None:
        if self._log is not None:
            with self._io_lock:
                self._log(text)
        else:
            self.write_err(f"[edbc:log] {text}")

    def random_int(self, lo: int, hi: int) -> int:
        with self._rng_lock:
            return self._rng.randint(lo, hi)

    # -- processes

    def start_thread(self, target: Callable[[], None], name: str) -> threading.Thread:
        with _stack_lock:
            old = threading.stack_size()
            threading.stack_size(self.config.stack_size)
            try:
                t = threading.Thread(target=target, name=name, daemon=True)
                t.start()
            finally:
                threading.stack_size(old)
        return t

    def register(self, proc: Process) -> Process:
        with self._proc_lock:
            self.processes[proc.pid] = proc
        return proc

    def process(self, pid: Pid) -> Optional[Process]:
        return self.processes.get(pid)

    def spawn_native(self, body: Callable[[EvalContext], Any], name: str = "",
                     kind: str = "process", report_crash: bool = True) -> Process:
        """Start a process running a Python callable on its own thread."""
        proc = self.register(Process(self, name, kind))

        def run() -> None:
            ctx = EvalContext(proc)
            try:
                proc.finish(body(ctx))
            except Aborted as e:
                proc.finish(error=e)
            except BaseException as e:
                proc.finish(error=e)
                if report_crash:
                    self.crashes.append((proc.pid, e))
                    self.write_err(crash_report(proc.pid, e))

        proc.thread = self.start_thread(run, f"{kind}-{proc.pid!r}")
        return proc

    def spawn(self, fun: Closure | FunRef, args: list, name: str = "") -> Process:
        module = fun.module

        def body(ctx: EvalContext) -> Any:
            ctx.module = module
            return self.interp.apply(ctx, fun, args)

        return self.spawn_native(body, name)

    def send(self, pid: Pid, msg: Any) -> None:
        proc = self.processes.get(pid)
        if proc is not None and proc.alive:
            proc.mailbox.put(msg)

    # -- evaluation

    def eval_call(self, module: str, name: str, args: Iterable[Any],
                  timeout: Optional[float] = None) -> Any:
        """Run ``module:name(args)`` on a fresh root process and return its value.

        Violations and runtime errors of the root process are re-raised here.
        """
        args = list(args)

        def body(ctx: EvalContext) -> Any:
            return self.interp.call(ctx, module, name, args)

        return self.run_root(body, module, f"{module}:{name}", timeout)

    def run_root(self, body: Callable[[EvalContext], Any], module: Optional[str] = None,
                 name: str = "root", timeout: Optional[float] = None) -> Any:
        """Run ``body`` on a root process, wait for it and return its result."""

        def run(ctx: EvalContext) -> Any:
            ctx.module = module
            return body(ctx)

        proc = self.spawn_native(run, name=name, kind="root", report_crash=False)
        if not proc.done.wait(timeout):
            proc.abort.abort()
            raise TimeoutError(f"{name} did not finish within {timeout} s")
        if proc.error is not None:
            raise proc.error
        return proc.result

    def native_process(self, name: str = "driver"):
        from ..server import NativeClient

        return NativeClient(self, name)

    def live(self, kind: Optional[str] = None) -> list[Process]:
        with self._proc_lock:
            procs = list(self.processes.values())
        return [p for p in procs if p.alive and (kind is None or p.kind == kind)]

    def quiesce(self, timeout: float = 2.0) -> bool:
        """Wait until every live process is blocked on an empty mailbox."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            busy = [p for p in self.live() if p.kind not in ("native",)
                    and not (p.mailbox.waiting and len(p.mailbox) == 0)]
            if not busy:
                return True
            time.sleep(0.01)
        return False

    def shutdown(self) -> None:
        from ..server import StopMessage

        for p in self.live():
            if p.kind == "server":
                p.mailbox.put(StopMessage(Atom("shutdown")))
            elif p.kind != "native":
                p.abort.abort()


def eval_source(source: str, name: str, args: list, config: Optional[RuntimeConfig] = None,
                **kw) -> Any:
    """Load ``source`` into a fresh runtime and evaluate ``name(args)``."""
    rt = Runtime(config, **kw)
    mod = rt.load_source(source)
    try:
        return rt.eval_call(mod.name, name, args)
    finally:
        rt.shutdown()


__all__ = [
    "EvalError", "LoadedModule", "Runtime", "RuntimeConfig", "contracts_disabled_by_env",
    "eval_source",
]
