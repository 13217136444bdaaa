"""Evaluator, processes and the runtime contract library."""
from .builtins import Builtin, BuiltinTable, default_table
from .interp import Interpreter, match
from .process import AbortToken, EvalContext, Mailbox, Process, PurityTrace
from .vm import LoadedModule, Runtime, RuntimeConfig, contracts_disabled_by_env, eval_source

__all__ = [
    "AbortToken", "Builtin", "BuiltinTable", "EvalContext", "Interpreter", "LoadedModule",
    "Mailbox", "Process", "PurityTrace", "Runtime", "RuntimeConfig", "contracts_disabled_by_env",
    "default_table", "eval_source", "match",
]
