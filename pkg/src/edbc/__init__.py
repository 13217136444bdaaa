"""Design-by-contract runtime verification for a small Erlang-like language."""
from .errors import ContractError, EvalError, ParseError, PlacementError, ValidationError
from .instrument import instrument_module
from .parser import parse_module
from .printer import pretty_print
from .runtime import Runtime, RuntimeConfig
from .violation import CallInfo, Violation

__version__ = "0.1.0"

__all__ = [
    "CallInfo", "ContractError", "EvalError", "ParseError", "PlacementError", "Runtime",
    "RuntimeConfig", "ValidationError", "Violation", "instrument_module", "parse_module",
    "pretty_print",
]
