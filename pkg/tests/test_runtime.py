import threading
import time

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from edbc import EvalError, Violation
from edbc.runtime.contracts import measure
from edbc.runtime.process import Mailbox
from edbc.values import Atom, term_eq

FAST = settings(max_examples=25, deadline=None,
                suppress_health_check=[HealthCheck.function_scoped_fixture])


def fib_oracle(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def run(rt, module, name, *args):
    return rt.eval_call(module, name, list(args), timeout=30)


# ---------------------------------------------------------------- evaluation


def test_fib_values(make_runtime):
    rt = make_runtime(files=["fib"])
    assert [run(rt, "fib", "fib", n) for n in (0, 1, 5, 10)] == [0, 1, 5, 55]


def test_precondition_report(make_runtime):
    rt = make_runtime(files=["fib"])
    with pytest.raises(Violation) as info:
        run(rt, "fib", "fib", -3)
    assert info.value.kind == "precondition"
    assert "Last call: fib:fib(-3)." in info.value.message


@pytest.mark.parametrize("src, name, args, reason", [
    ("f(0) -> a.", "f", [1], "function_clause"),
    ("f(X) -> X + a.", "f", [1], "badarith"),
    ("f() -> nowhere:g().", "f", [], "undef"),
    ("f() -> {A} = {1, 2}, A.", "f", [], "badmatch"),
    ("f(X) -> case X of 1 -> a end.", "f", [2], "case_clause"),
])
def test_runtime_errors(make_runtime, src, name, args, reason):
    rt = make_runtime(f"-module(m).\n{src}\n")
    with pytest.raises(EvalError) as info:
        run(rt, "m", name, *args)
    assert info.value.reason == reason


def test_builtins(make_runtime):
    rt = make_runtime("-module(m).\n"
                      "nth() -> lists:nth(2, [a, b, c]).\n"
                      "all() -> lists:all(fun(K) -> K /= z end, [a, b]).\n"
                      "fold() -> lists:foldl(fun erlang:'*'/2, 1, [2, 3, 7]).\n")
    assert run(rt, "m", "nth") == Atom("b")
    assert run(rt, "m", "all") is True
    assert run(rt, "m", "fold") == 42


def test_depth_limit(make_runtime):
    rt = make_runtime("-module(m).\ndown(0) -> 0;\ndown(N) -> 1 + down(N - 1).\n", max_depth=500)
    assert run(rt, "m", "down", 400) == 400
    with pytest.raises(EvalError) as info:
        run(rt, "m", "down", 600)
    assert info.value.reason == "system_limit"


# ---------------------------------------------------------------- pre / post

PROBE = """-module(p).
?PRE(fun() -> ?P(1) > 0 end).
f(X) -> edbc:log(body), X.
?POST(fun() -> edbc:log(checked), ?R > 0 end).

?PRE(fun() -> {?P(1) >= 0, "negative input"} end).
g(X) -> X.

?PRE(fun() -> 42 end).
h(X) -> X.

?POST(fun() -> edbc:log(outer), true end).
outer(X) -> f(X) + 1.
"""


@FAST
@given(x=st.integers(-5, 5))
def test_pre_guards_delayed_call(make_runtime, x):
    rt = make_runtime(PROBE)
    if x > 0:
        assert run(rt, "p", "f", x) == x
        # delayed call and condition each ran exactly once
        assert rt.log_sink.chunks == ["body", "checked"]
    else:
        with pytest.raises(Violation):
            run(rt, "p", "f", x)
        assert rt.log_sink.chunks == []


def test_user_reason_and_bad_return(make_runtime):
    rt = make_runtime(PROBE)
    with pytest.raises(Violation) as info:
        run(rt, "p", "g", -1)
    assert info.value.user_reason == "negative input"
    assert info.value.message.endswith("Reason: negative input")
    with pytest.raises(EvalError) as err:
        run(rt, "p", "h", 1)
    assert err.value.reason == "bad_contract_return"


def test_first_error_wins(make_runtime):
    rt = make_runtime(PROBE)
    with pytest.raises(Violation) as info:
        run(rt, "p", "outer", -1)
    assert "p:f(-1)" in info.value.message
    assert rt.log_sink.chunks == []  # the outer postcondition never ran


def test_find_contracts(make_runtime):
    rt = make_runtime(files=["find", "find_bug"])
    a, b, c, z = map(Atom, "abcz")
    assert run(rt, "find", "find", [a, b, c], b) == 2
    assert run(rt, "find", "find", [a, b], z) == -1
    with pytest.raises(Violation) as info:
        run(rt, "find_bug", "find", [a, b], z)
    assert info.value.kind == "postcondition"


# ---------------------------------------------------------------- decrease

DECR = """-module(d).
?DECREASES(?P(1)).
loose(0, _) -> done;
loose(N, stay) -> loose(N, go);
loose(N, go) -> loose(N - 1, stay).
?SDECREASES(?P(1)).
tight(0, _) -> done;
tight(N, stay) -> tight(N, go);
tight(N, go) -> tight(N - 1, stay).
?SDECREASES(?P(1)).
walk([]) -> done;
walk([_ | T]) -> walk(T).
?SDECREASES(?P(1)).
tup({0}) -> done;
tup({N}) -> tup({N - 1}).
"""


def test_decrease_variants(make_runtime):
    rt = make_runtime(DECR)
    a, b = Atom("a"), Atom("b")
    assert run(rt, "d", "loose", 3, Atom("stay")) == Atom("done")
    with pytest.raises(Violation) as info:
        run(rt, "d", "tight", 3, Atom("stay"))
    assert "Previous call: tight(3,stay). Current call: tight(3,go)." in info.value.message
    assert run(rt, "d", "walk", [1, 2, 3]) == Atom("done")
    assert [measure(v) for v in (4, [a, b], "abc")] == [4, 2, 3]
    with pytest.raises(EvalError) as err:
        run(rt, "d", "tup", (2,))
    assert err.value.reason == "not_measurable"


def test_fib_bug_report(make_runtime):
    rt = make_runtime(files=["fib_bug"])
    with pytest.raises(Violation) as info:
        run(rt, "fib_bug", "fib", 2)
    assert info.value.kind == "decrease"
    assert "Previous call: fib(2). Current call: fib(4)." in info.value.message


# ---------------------------------------------------------------- specs


def test_spec_reports(make_runtime):
    rt = make_runtime(files=["fib_spec"])
    assert run(rt, "fib_spec", "fib", 10) == 55
    with pytest.raises(Violation) as pre:
        run(rt, "fib_spec", "fib", Atom("a"))
    assert pre.value.kind == "spec_pre"
    assert "The value a is not of type integer()." in pre.value.message
    with pytest.raises(Violation) as post:
        run(rt, "fib_spec", "half", 3)
    assert post.value.kind == "spec_post"


# ---------------------------------------------------------------- time

TIMED = """-module(t).
?EXPECTED_TIME(fun() -> ?P(2) end).
nap(Ms, _Expected) -> timer:sleep(Ms), ok.
?TIMEOUT(fun() -> ?P(2) end).
bounded(Ms, _Budget) -> timer:sleep(Ms), finished.
?TIMEOUT(fun() -> 500 end).
early() -> timer:sleep(5), fib_free(-1).
?PRE(fun() -> ?P(1) >= 0 end).
fib_free(N) -> N.
?EXPECTED_TIME(fun() -> -1 end).
negative() -> ok.
"""


def test_expected_time(make_runtime):
    rt = make_runtime(TIMED)
    assert run(rt, "t", "nap", 0, 1000) == Atom("ok")
    with pytest.raises(Violation) as info:
        run(rt, "t", "nap", 40, 5)
    assert info.value.kind == "expected_time"
    assert "took too much time" in info.value.message
    with pytest.raises(EvalError) as err:
        run(rt, "t", "negative")
    assert err.value.reason == "bad_contract_return"


@settings(max_examples=10, deadline=None,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(ms=st.integers(0, 30))
def test_expected_time_never_fails_within_budget(make_runtime, ms):
    rt = make_runtime(TIMED)
    # 25 ms above the sleep covers interpreter overhead; slack stays 0
    assert run(rt, "t", "nap", ms, ms + 25) == Atom("ok")


def test_timeout(make_runtime):
    rt = make_runtime(TIMED)
    assert run(rt, "t", "bounded", 50, 500) == Atom("finished")
    start = time.monotonic()
    with pytest.raises(Violation) as info:
        run(rt, "t", "bounded", 500, 50)
    elapsed = time.monotonic() - start
    assert info.value.kind == "timeout"
    assert elapsed < 0.25
    with pytest.raises(Violation) as inner:
        run(rt, "t", "early")
    assert inner.value.kind == "precondition"


# ---------------------------------------------------------------- purity


def test_fig8_purity(make_runtime):
    rt = make_runtime(files=["purity", "purity_bug"])
    assert run(rt, "purity", "g4") == 42
    assert run(rt, "purity", "g3") == Atom("undefined")
    with pytest.raises(Violation) as info:
        run(rt, "purity_bug", "g3")
    assert "impure BIF erlang:put/2 when evaluating g3()" in info.value.message


PURE_OPS = ["lists:sum([1, 2])", "length([a])", "X + 1", "lists:reverse([X])",
            "integer_to_list(X)", "lists:map(fun(Y) -> Y * 2 end, [X])"]
IMPURE_OPS = ["put(k, X)", "get(k)", "self()", "edbc:log(X)", "send(self(), X)",
              "timer:sleep(0)", "rand:uniform(3)", "edbc:recv(0)", "io:format(\"\")",
              "spawn(fun() -> ok end)"]


@st.composite
def purity_programs(draw):
    """A ?PURE function whose statements may be guarded by its argument."""
    x = draw(st.integers(0, 3))
    stmts, impure_ran = [], False
    for _ in range(draw(st.integers(1, 5))):
        op = draw(st.sampled_from(PURE_OPS + IMPURE_OPS))
        guard = draw(st.one_of(st.none(), st.integers(0, 3)))
        if guard is None:
            stmts.append(op)
            runs = True
        else:
            stmts.append(f"case X of {guard} -> {op}; _ -> skipped end")
            runs = guard == x
        impure_ran |= runs and op in IMPURE_OPS
    body = ",\n    ".join(stmts + ["done"])
    src = f"-module(pp).\n?PURE.\nf(X) ->\n    {body}.\n"
    return src, x, impure_ran


@settings(max_examples=50, deadline=None,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(purity_programs())
def test_purity_oracle(make_runtime, case):
    src, x, impure_ran = case
    rt = make_runtime(src)
    if impure_ran:
        with pytest.raises(Violation) as info:
            run(rt, "pp", "f", x)
        assert info.value.kind == "purity"
    else:
        assert run(rt, "pp", "f", x) == Atom("done")


def test_logging_inside_contracts_is_not_impure(make_runtime):
    rt = make_runtime("-module(m).\n?PURE.\n?PRE(fun() -> edbc:log(checking), true end).\n"
                      "f() -> 1 + 1.\n")
    assert run(rt, "m", "f") == 2
    assert rt.log_sink.chunks == ["checking"]


# ---------------------------------------------------------------- processes

FIFO = """-module(q).
main(L) ->
    Self = self(),
    spawn(fun() -> [send(Self, X) || X <- L] end),
    collect(length(L)).
collect(0) -> [];
collect(N) ->
    {ok, X} = edbc:recv(infinity),
    [X | collect(N - 1)].
"""


@FAST
@given(msgs=st.lists(st.integers(), max_size=30))
def test_process_messages_fifo(make_runtime, msgs):
    rt = make_runtime(FIFO)
    assert run(rt, "q", "main", msgs) == msgs


@settings(max_examples=30, deadline=None)
@given(batches=st.lists(st.lists(st.integers(), max_size=10), min_size=1, max_size=4))
def test_mailbox_fifo_per_sender(batches):
    box = Mailbox()
    threads = [threading.Thread(target=lambda i=i, b=b: [box.put((i, m)) for m in b])
               for i, b in enumerate(batches)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    got = [box.receive(timeout=1)[1] for _ in range(sum(map(len, batches)))]
    for i, b in enumerate(batches):
        assert [m for s, m in got if s == i] == b


# ---------------------------------------------------------------- transparency

CASES = [
    ("fib", "fib", [12]),
    ("find", "find", [[3, 1, 4, 1, 5], 4]),
    ("find", "find", [[3, 1], 9]),
    ("plain", "sum", [[1, 2, 3]]),
    ("plain", "double_all", [[1, 2]]),
    ("purity", "g4", []),
    ("fib_spec", "fib", [8]),
    ("time_contracts", "f_time", [[1, 2]]),
    ("selective_receive", "main", [Atom("fair")]),
]


@pytest.mark.parametrize("module, name, args", CASES, ids=lambda c: str(c))
def test_contracts_do_not_change_results(make_runtime, module, name, args):
    on = make_runtime(files=[module], slack_ms=20)
    off = make_runtime(files=[module], contracts_enabled=False)
    assert term_eq(run(on, module, name, *args), run(off, module, name, *args), exact=True)


@FAST
@given(n=st.integers(0, 12), items=st.lists(st.integers(0, 4), min_size=1, max_size=6),
       key=st.integers(0, 5))
def test_transparency_property(make_runtime, n, items, key):
    on = make_runtime(files=["fib", "find"])
    off = make_runtime(files=["fib", "find"], contracts_enabled=False)
    assert run(on, "fib", "fib", n) == run(off, "fib", "fib", n) == fib_oracle(n)
    if key not in items[-1:]:
        assert run(on, "find", "find", items, key) == run(off, "find", "find", items, key)
