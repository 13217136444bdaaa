"""Exception hierarchy shared by the parser, instrumenter and runtime."""
from __future__ import annotations

from typing import Any


class EdbcError(Exception):
    pass


class ParseError(EdbcError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class PlacementError(ParseError):
    """A contract directive sits where no function can own it."""


class ValidationError(ParseError):
    """?P/?R misuse, duplicate definitions, reserved names."""


class ContractError(EdbcError):
    """Contracts on one function that cannot be combined."""


class EvalError(EdbcError):
    """A runtime error of the evaluated program (Erlang's ``error:Reason``).

    ``reason`` is one of function_clause, badarith, undef, badarg, badmatch,
    case_clause, if_clause, badfun, badarity, bad_contract_return,
    not_measurable, system_limit, noproc, server_terminated, unbound.
    """

    def __init__(self, reason: str, detail: Any = None, cause: BaseException | None = None):
        self.reason = reason
        self.detail = detail
        self.cause = cause
        text = reason if detail is None else f"{reason}: {detail}"
        super().__init__(text)


class Aborted(BaseException):
    """Raised inside a strand whose ?TIMEOUT budget expired.

    Derives from BaseException so that nothing in the evaluator swallows it.
    """
