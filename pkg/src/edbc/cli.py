"""Command line: run programs, dump instrumented code, generate contract docs.

Exit codes: 0 success, 1 contract violation, 2 runtime error,
3 parse/load/contract-combination error, 4 IO error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .docs import generate_docs
from .errors import ContractError, EvalError, ParseError
from .instrument import instrument_module
from .parser import parse_module, parse_terms
from .printer import pretty_print
from .report import format_error
from .runtime.vm import Runtime, RuntimeConfig, contracts_disabled_by_env
from .values import format_value
from .violation import Violation

EXIT_OK, EXIT_VIOLATION, EXIT_RUNTIME, EXIT_LOAD, EXIT_IO = 0, 1, 2, 3, 4


def is_violation(e: BaseException) -> bool:
    """True for a violation, or a runtime error caused by one (e.g. a dead server)."""
    while e is not None:
        if isinstance(e, Violation):
            return True
        e = getattr(e, "cause", None)
    return False


def parse_entry(text: str) -> tuple[Optional[str], str, int]:
    """``f/N`` or ``mod:f/N``."""
    head, sep, arity = text.rpartition("/")
    if not sep or not arity.isdigit() or not head:
        raise ValueError(f"bad entry {text!r}, expected name/arity")
    module, _, name = head.rpartition(":")
    return module or None, name, int(arity)


def _err(msg: str) -> None:
    sys.stderr.write(msg if msg.endswith("\n") else msg + "\n")


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


# ---------------------------------------------------------------- run


def cmd_run(args: argparse.Namespace) -> int:
    enabled = not (args.no_contracts or contracts_disabled_by_env())
    config = RuntimeConfig(contracts_enabled=enabled, slack_ms=args.slack, seed=args.seed,
                           policy=args.policy)
    try:
        module, name, arity = parse_entry(args.entry)
        arg_exprs = parse_terms(args.args or "")
    except (ValueError, ParseError) as e:
        _err(f"edbc: {e}")
        return EXIT_LOAD
    if len(arg_exprs) != arity:
        _err(f"edbc: {name}/{arity} needs {arity} arguments, got {len(arg_exprs)}")
        return EXIT_LOAD

    rt = Runtime(config)
    try:
        loaded = [rt.load_source(_read(f)) for f in args.files]
    except OSError as e:
        _err(f"edbc: {e}")
        return EXIT_IO
    except (ParseError, ContractError) as e:
        _err(f"edbc: {e}")
        return EXIT_LOAD
    if module is None:
        owners = [m.name for m in loaded if m.source.get(name, arity) is not None]
        if not owners:
            _err(f"edbc: no loaded module defines {name}/{arity}")
            return EXIT_LOAD
        module = owners[0]

    def body(ctx):
        values = [rt.interp.ev(e, {}, ctx) for e in arg_exprs]
        return rt.interp.call(ctx, module, name, values)

    try:
        result = rt.run_root(body, module, f"{module}:{name}")
    except (Violation, EvalError) as e:
        _err(format_error(e))
        return EXIT_VIOLATION if is_violation(e) else EXIT_RUNTIME
    finally:
        rt.quiesce(1.0)
        rt.shutdown()
    print(format_value(result))
    # a violation in another process (reported on stderr already) still fails the run
    others = [t.reason for t in rt.terminations] + [e for _, e in rt.crashes]
    return EXIT_VIOLATION if any(is_violation(e) for e in others) else EXIT_OK


# ---------------------------------------------------------------- instrument / doc


def cmd_instrument(args: argparse.Namespace) -> int:
    try:
        module = parse_module(_read(args.file))
        inst = instrument_module(module)
    except OSError as e:
        _err(f"edbc: {e}")
        return EXIT_IO
    except (ParseError, ContractError) as e:
        _err(f"edbc: {e}")
        return EXIT_LOAD
    if args.dump:
        sys.stdout.write(pretty_print(inst.module))
        return EXIT_OK
    for f in inst.fundefs:
        role, original = inst.roles.get(f.key, ("plain", f.name))
        print(f"{f.name}/{f.arity}\t{role}\t{original}")
    return EXIT_OK


def cmd_doc(args: argparse.Namespace) -> int:
    try:
        module = parse_module(_read(args.file))
    except OSError as e:
        _err(f"edbc: {e}")
        return EXIT_IO
    except ParseError as e:
        _err(f"edbc: {e}")
        return EXIT_LOAD
    out_dir = Path(args.out) if args.out else Path(args.file).parent
    target = out_dir / f"{module.name}.md"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        target.write_text(generate_docs(module), encoding="utf-8")
    except OSError as e:
        _err(f"edbc: cannot write {target}: {e}")
        return EXIT_IO
    print(target)
    return EXIT_OK


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edbc", description="Contract checking for .edl programs")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate an entry function")
    run.add_argument("files", nargs="+")
    run.add_argument("--entry", required=True, help="name/arity or module:name/arity")
    run.add_argument("--args", default="", help="comma separated argument terms")
    run.add_argument("--no-contracts", action="store_true")
    run.add_argument("--policy", choices=["fair", "resend"], default="fair")
    run.add_argument("--slack", type=float, default=20.0, help="time contract slack in ms")
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=cmd_run)

    ins = sub.add_parser("instrument", help="show the instrumented module")
    ins.add_argument("file")
    ins.add_argument("--dump", action="store_true", help="print the instrumented source")
    ins.set_defaults(func=cmd_instrument)

    doc = sub.add_parser("doc", help="write markdown contract docs")
    doc.add_argument("file")
    doc.add_argument("--out", default=None)
    doc.set_defaults(func=cmd_doc)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
