"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""
from __future__ import annotations

import random
import re
import statistics
import time
from collections import deque

import pytest

from conftest import example, example_source
from edbc import Runtime, RuntimeConfig, Violation
from edbc.cli import main as cli_main
from edbc.instrument import instrument_module
from edbc.parser import parse_module
from edbc.server import (From, RequestEnvelope, ServerCallbacks, ServerPolicy, ServerQueues,
                         reply, serve_loop_step)
from edbc.syntax import Call, Fun
from edbc.values import Atom, Pid, term_eq

RESULTS: dict[int, tuple[bool, str]] = {}

TITLES = {
    1: "fibonacci suite",
    2: "find suite",
    3: "spec suite",
    4: "purity suite",
    5: "time suite",
    6: "instrumentation structure",
    7: "transparency",
    8: "readers-writers",
    9: "selective receive",
    10: "fair vs resend",
}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    assert ok, f"criterion {n} ({TITLES[n]}): {detail}"


def summary_lines() -> list[str]:
    lines = []
    for n in sorted(TITLES):
        if n in RESULTS:
            ok, detail = RESULTS[n]
            lines.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {TITLES[n]}: {detail}")
        else:
            lines.append(f"criterion {n:2d} NOT RUN  {TITLES[n]}")
    return lines


def runtime(*names, **config) -> Runtime:
    chunks = {"out": [], "err": []}
    rt = Runtime(RuntimeConfig(**config), out=chunks["out"].append, err=chunks["err"].append,
                 log=lambda _: None)
    rt.chunks = chunks
    for n in names:
        rt.load_file(example(n))
    return rt


def violation_of(rt, module, name, args):
    try:
        rt.eval_call(module, name, args, timeout=30)
    except Violation as v:
        return v
    return None


def fib_oracle(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# ---------------------------------------------------------------- 1


def test_criterion_1_fibonacci(capsys):
    start = time.perf_counter()
    rt = runtime("fib", "fib_bug")
    values = [rt.eval_call("fib", "fib", [n]) for n in (0, 1, 10)]
    expected = [fib_oracle(n) for n in (0, 1, 10)]
    neg = violation_of(rt, "fib", "fib", [-1])
    exit_code = cli_main(["run", str(example("fib")), "--entry", "fib/1", "--args", "-1"])
    bug = violation_of(rt, "fib_bug", "fib", [2])
    elapsed = time.perf_counter() - start
    rt.shutdown()
    capsys.readouterr()
    ok = (values == expected == [0, 1, 55]
          and neg is not None and neg.kind == "precondition" and exit_code == 1
          and bug is not None and "Previous call: fib(2). Current call: fib(4)." in bug.message
          and elapsed < 1.0)
    record(1, ok, f"values={values} fib(-1)->{neg and neg.kind} exit={exit_code} "
                  f"decrease_report={'ok' if bug else None} time={elapsed:.3f}s")


# ---------------------------------------------------------------- 2


def find_oracle(items, key):
    for i, x in enumerate(items, start=1):
        if x == key:
            return i
    return -1


def test_criterion_2_find():
    rng = random.Random(2024)
    rt = runtime("find", "find_bug")
    cases = []
    while len(cases) < 200:
        items = [rng.randint(0, 9) for _ in range(rng.randint(1, 8))]
        key = rng.randint(0, 12)
        if find_oracle(items, key) == len(items):
            continue  # the first postcondition rejects a hit on the last position
        cases.append((items, key))
    wrong = [(l, k) for l, k in cases if rt.eval_call("find", "find", [l, k]) != find_oracle(l, k)]
    misses = [(l, k) for l, k in cases if find_oracle(l, k) == -1]
    caught = [v for l, k in misses
              if (v := violation_of(rt, "find_bug", "find", [l, k])) and v.kind == "postcondition"]
    rt.shutdown()
    ok = not wrong and misses and len(caught) == len(misses)
    record(2, bool(ok), f"{len(cases)} instances, {len(wrong)} wrong, "
                        f"buggy find caught {len(caught)}/{len(misses)} misses")


# ---------------------------------------------------------------- 3


def test_criterion_3_spec():
    rt = runtime("fib_spec")
    pre = violation_of(rt, "fib_spec", "fib", [Atom("a")])
    post = violation_of(rt, "fib_spec", "half", [3])
    rt.shutdown()
    ok = (pre is not None and "The value a is not of type integer()." in pre.message
          and post is not None and post.kind == "spec_post")
    record(3, ok, f"fib(a)->{pre and pre.kind} half(3)->{post and post.kind}")


# ---------------------------------------------------------------- 4

PURE_OPS = ["lists:sum([X, 2])", "length([a, b])", "X * 3", "lists:reverse([X, 1])",
            "integer_to_list(X)", "lists:foldl(fun erlang:'+'/2, 0, [X])"]
IMPURE_OPS = ["put(key, X)", "get(key)", "self()", "edbc:log(X)", "send(self(), X)",
              "timer:sleep(0)", "rand:uniform(2)", "edbc:recv(0)", "spawn(fun() -> ok end)"]


def purity_program(rng: random.Random) -> tuple[str, int, bool]:
    x = rng.randint(0, 2)
    stmts, impure_ran = [], False
    for _ in range(rng.randint(1, 4)):
        op = rng.choice(PURE_OPS + IMPURE_OPS)
        if rng.random() < 0.5:
            stmts.append(op)
            runs = True
        else:
            g = rng.randint(0, 2)
            stmts.append(f"case X of {g} -> {op}; _ -> skip end")
            runs = g == x
        impure_ran |= runs and op in IMPURE_OPS
    body = ",\n    ".join(stmts + ["done"])
    return f"-module(gen).\n?PURE.\nf(X) ->\n    {body}.\n", x, impure_ran


def test_criterion_4_purity():
    rt = runtime("purity", "purity_bug")
    g4 = rt.eval_call("purity", "g4", [])
    g3 = violation_of(rt, "purity_bug", "g3", [])
    rt.shutdown()
    rng = random.Random(7)
    disagreements = 0
    flagged = 0
    for _ in range(50):
        src, x, impure_ran = purity_program(rng)
        r = Runtime(RuntimeConfig(), out=lambda _: None, err=lambda _: None, log=lambda _: None)
        r.load_source(src)
        v = violation_of(r, "gen", "f", [x])
        r.shutdown()
        detected = v is not None and v.kind == "purity"
        flagged += detected
        disagreements += detected != impure_ran
    ok = (g4 == 2 * 3 * 7 and g3 is not None and "impure BIF erlang:put/2" in g3.message
          and disagreements == 0)
    record(4, ok, f"g4={g4} g3 report={'ok' if g3 else None} "
                  f"oracle disagreements={disagreements}/50 (flagged {flagged})")


# ---------------------------------------------------------------- 5


def test_criterion_5_time():
    rt = runtime("time_contracts", slack_ms=20)
    tasks = list(range(1, 11))
    start = time.perf_counter()
    result = rt.eval_call("time_contracts", "f_time", [tasks])
    real_ms = (time.perf_counter() - start) * 1000
    wrong = violation_of(rt, "time_contracts", "f_time2", [tasks])
    rt.shutdown()
    m = re.search(r"Real: ([\d.]+) ms\. Expected: ([\d.]+) ms", wrong.message) if wrong else None
    real, expected = (float(m.group(1)), float(m.group(2))) if m else (0.0, 0.0)
    ok = (len(result) == 10 and 150 <= real_ms <= 300
          and wrong is not None and "took too much time" in wrong.message and real > expected)
    record(5, ok, f"right formula passed in {real_ms:.1f} ms; wrong formula "
                  f"Real={real:.1f} Expected={expected:g}")


# ---------------------------------------------------------------- 6


def test_criterion_6_instrumentation():
    inst = instrument_module(parse_module(example_source("fib")))
    roles = {name: role for (name, _), (role, _) in inst.roles.items()}
    frames = []
    rt = Runtime(RuntimeConfig(), tracer=lambda m, n, a: frames.append(roles.get(n))
                 if m == "fib" and n in roles else None)
    rt.load_file(example("fib"))
    value = rt.eval_call("fib", "fib", [3])
    rt.shutdown()
    cycle = ["entry", "pre:pre", "original", "decrease"]
    expected = cycle * 4 + cycle[:3]  # fib(3) makes five calls, four of them recursive
    tails_ok = True
    for f in inst.fundefs:
        role = roles[f.name]
        if role.startswith("post:") or role == "original":
            continue
        for c in f.clauses:
            last = c.body[-1]
            delayed = last.args[-1] if isinstance(last, Call) and last.args else None
            tails_ok &= isinstance(last, Call) and (
                not isinstance(delayed, Fun) or isinstance(delayed.clauses[-1].body[-1], Call))
    ok = len(inst.fundefs) == 4 and frames == expected and value == 2 and tails_ok
    record(6, ok, f"{len(inst.fundefs)} definitions, {len(frames)} traced frames in cyclic order="
                  f"{frames == expected}, tail calls={tails_ok}")


# ---------------------------------------------------------------- 7

TRANSPARENCY_CASES = [
    ("fib", "fib", [15]),
    ("find", "find", [[4, 8, 15, 16, 23, 42], 15]),
    ("find", "find", [[1, 2], 3]),
    ("fib_spec", "fib", [12]),
    ("plain", "sum", [[1, 2, 3, 4]]),
    ("plain", "double_all", [[5, 6]]),
    ("purity", "g3", []),
    ("purity", "g4", []),
    ("time_contracts", "f_time", [[1, 2, 3]]),
    ("time_contracts", "bounded", [5, 200]),
    ("selective_receive", "main", [Atom("resend")]),
    ("readers_writers", "main", [4, 5]),
]

HAND_WRITTEN_FIB = """-module(fib).
fib(0) -> 0;
fib(1) -> 1;
fib(N) -> fib(N - 1) + fib(N - 2).
"""


def _timed(rt, n=18, reps=5):
    times = []
    for _ in range(reps):
        t = time.perf_counter()
        rt.eval_call("fib", "fib", [n])
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def test_criterion_7_transparency():
    mismatches = []
    for module, name, args in TRANSPARENCY_CASES:
        results = []
        for enabled in (True, False):
            rt = runtime(module, contracts_enabled=enabled, slack_ms=20, seed=5)
            results.append(rt.eval_call(module, name, args, timeout=30))
            rt.shutdown()
        if not term_eq(results[0], results[1], exact=True):
            mismatches.append((module, name))
    disabled = runtime("fib", contracts_enabled=False)
    hand = Runtime(RuntimeConfig())
    hand.load_source(HAND_WRITTEN_FIB)
    ratio = _timed(disabled) / _timed(hand)
    ok = not mismatches and ratio <= 2.0
    record(7, ok, f"{len(TRANSPARENCY_CASES) - len(mismatches)}/{len(TRANSPARENCY_CASES)} equal, "
                  f"disabled/hand-written time ratio={ratio:.2f}")


# ---------------------------------------------------------------- 8


def test_criterion_8_readers_writers():
    # without cpre: 20 clients x 10 sessions = 200 operations
    rt = runtime("readers_writers_nocpre", seed=8)
    rt.eval_call("readers_writers_nocpre", "main", [20, 10], timeout=60)
    rt.quiesce(1.0)
    rt.shutdown()
    terms = [t for t in rt.terminations if isinstance(t.reason, Violation)]
    bad_state = False
    report_ok = False
    for t in terms:
        state = t.reason.details.get("result", (None, None, None))[-1]
        bad_state |= (isinstance(state, tuple) and state[0] == Atom("state")
                      and state[2] is True and state[1] >= 1)
        report_ok |= "The invariant does not hold." in t.reason.message
    # with cpre: 20 clients x 50 sessions = 1000 operations
    rt = runtime("readers_writers", seed=8)
    states = []
    rt.server_observers.append(lambda pid, s: states.append(s))
    done = rt.eval_call("readers_writers", "main", [20, 50], timeout=120)
    rt.shutdown()
    served = sum(len(s.served) for s in rt.servers.values())
    safe = all(not w or r == 0 for _, r, w in states)
    ok = (len(terms) >= 1 and report_ok and bad_state
          and done == Atom("ok") and not rt.terminations and safe and served >= 1000)
    record(8, ok, f"no cpre: {len(terms)} invariant violation(s), writer+reader state={bad_state}; "
                  f"cpre: {served} requests served, {len(states)} states sampled, all safe={safe}")


# ---------------------------------------------------------------- 9


def test_criterion_9_selective_receive():
    logs = {}
    for policy in ("fair", "resend"):
        rt = runtime("selective_receive")
        rt.eval_call("selective_receive", "main", [Atom(policy)], timeout=30)
        rt.shutdown()
        logs[policy] = [int(c.split(":")[1]) for c in "".join(rt.chunks["out"]).splitlines()]
    ok = all(log == list(range(10)) for log in logs.values())
    record(9, ok, " ".join(f"{p}={log}" for p, log in logs.items()))


# ---------------------------------------------------------------- 10


def test_criterion_10_fair_vs_resend():
    opened = Atom("open")

    def callbacks():
        return ServerCallbacks(
            "gate", lambda: False,
            handle_call=lambda r, f, s: reply(r, True if r is opened else s),
            cpre=lambda r, f, s: (r is opened or s, s))

    order = {}
    for policy in ServerPolicy:
        # r1 is deferred, then open enables it together with the newer r2
        mailbox = deque(RequestEnvelope(Atom(n), From(Pid(), i))
                        for i, n in enumerate(["r1", "open", "r2"]))
        queues, state, served = ServerQueues(), False, []
        while True:
            try:
                step, queues, state = serve_loop_step(policy, queues, mailbox, state, callbacks())
            except IndexError:
                break
            if step.action == "reply":
                served.append(step.reply.name)
        order[policy.value] = served
    ok = order["fair"] == ["open", "r1", "r2"] and order["resend"] == ["open", "r2", "r1"]
    record(10, ok, f"fair served {order['fair']}, resend served {order['resend']}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
