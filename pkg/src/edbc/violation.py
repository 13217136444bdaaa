"""Structured contract-violation records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import EdbcError

KINDS = (
    "precondition", "postcondition", "decrease", "expected_time", "timeout",
    "purity", "invariant", "spec_pre", "spec_post",
)


@dataclass(frozen=True)
class CallInfo:
    module: str
    name: str
    args: tuple

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class CheckOutcome:
    """Normalised result of a contract condition."""

    holds: bool
    reason: Optional[str] = None


class Violation(EdbcError):
    """A contract that did not hold. ``message`` is the rendered report."""

    def __init__(self, kind: str, message: str, call: Optional[CallInfo] = None,
                 user_reason: Optional[str] = None, details: Optional[dict] = None):
        if kind not in KINDS:
            raise ValueError(f"unknown violation kind {kind!r}")
        self.kind = kind
        self.message = message
        self.call = call
        self.user_reason = user_reason
        self.details: dict[str, Any] = details or {}
        super().__init__(message)

    def __repr__(self) -> str:
        return f"Violation({self.kind!r}, {self.message!r})"


@dataclass
class ServerTermination:
    """Why a guarded server stopped, kept for the termination report."""

    server: str
    last_message: Any
    state: Any
    reason: BaseException
    extra: dict = field(default_factory=dict)
