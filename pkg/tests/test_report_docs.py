import pytest

from conftest import EXAMPLES, example_source
from edbc import Violation
from edbc.docs import count_blocks, doc_entries, generate_docs
from edbc.parser import parse_module
from edbc.report import (call_text, condition_message, decrease_message, expected_time_message,
                         format_result, invariant_message, purity_message, spec_message,
                         timeout_message)
from edbc.values import Atom, Pid
from edbc.violation import CallInfo

FIB = CallInfo("ex", "fib", (2,))


def test_templates():
    assert condition_message("precondition", CallInfo("fib", "fib", (-1,)), None) == \
        "The precondition does not hold. Last call: fib:fib(-1)."
    assert condition_message("postcondition", FIB, "bad").endswith(" Reason: bad")
    assert decrease_message("fib", (2,), (4,)) == \
        "Decreasing condition does not hold. Previous call: fib(2). Current call: fib(4)."
    assert purity_message(CallInfo("ex", "g3", ()), ("erlang", "put", 2)) == (
        "The function is not pure. Last call: ex:g3(). "
        "It has call the impure BIF erlang:put/2 when evaluating g3().")
    assert spec_message("pre", CallInfo("ex", "fib", (Atom("a"),)), Atom("a"), "integer()") == (
        "The spec precondition does not hold. Last call: ex:fib(a). "
        "The value a is not of type integer().")
    assert expected_time_message(CallInfo("ex", "f_time", ([1, 2],)), 1509.913, 1020) == (
        "The execution of ex:f_time([1,2]) took too much time. "
        "Real: 1509.913 ms. Expected: 1020 ms. Difference: 489.913 ms)")
    assert timeout_message(FIB, 50) == "The execution of ex:fib(2) exceeded the timeout of 50 ms."


def test_invariant_template():
    state = (Atom("state"), 0, True)
    call = CallInfo("readers_writers", "handle_call", (Atom("request_read"), (Pid(), 1), state))
    result = (Atom("reply"), Atom("pass"), (Atom("state"), 1, True))
    assert invariant_message(call, result, None).split("\n") == [
        "The invariant does not hold.",
        "Last call: readers_writers:handle_call(request_read, ..., {state,0,true}).",
        "Result: {reply, pass,{state,1,true}}",
    ]
    assert format_result((Atom("noreply"), 3)) == "{noreply, 3}"


def test_call_text():
    assert call_text(CallInfo("m", "f", ([1, 2], "s", Atom("x")))) == 'm:f([1,2],"s",x)'
    assert call_text(CallInfo("m", "f", ()), with_module=False) == "f()"


def golden_violations(make_runtime):
    rt = make_runtime(files=["fib", "fib_bug", "fib_spec", "find_bug", "purity_bug"])
    rt2 = make_runtime(files=["time_contracts"])
    cases = [(rt, "fib", "fib", [-1]), (rt, "fib", "fib", [-7]), (rt, "fib_bug", "fib", [2]),
             (rt, "fib_bug", "fib", [3]), (rt, "fib_spec", "fib", [Atom("a")]),
             (rt, "fib_spec", "half", [3]), (rt, "find_bug", "find", [[1], 2]),
             (rt, "purity_bug", "g3", []), (rt2, "time_contracts", "f_time2", [[1, 3]]),
             (rt2, "time_contracts", "bounded", [200, 20])]
    out = []
    for r, m, f, args in cases:
        with pytest.raises(Violation) as info:
            r.eval_call(m, f, args, timeout=10)
        out.append(info.value)
    return out


def test_reports_are_injective(make_runtime):
    vs = golden_violations(make_runtime)
    triples = {(v.kind, repr(v.call), v.message) for v in vs}
    assert len(triples) >= 9
    assert len({t[2] for t in triples}) == len(triples)


def test_find_doc_blocks():
    m = parse_module(example_source("find"))
    (find,) = [e for e in doc_entries(m) if e.name == "find"]
    assert find.block_count == 3
    text = generate_docs(m)
    section = text.split("## find/2")[1].split("\n## ")[0]
    assert count_blocks(section) == 3
    assert section.count("?POST(") == 2 and section.count("?PRE(") == 1


def test_fib_doc_shows_precondition():
    assert "?P(1) >= 0" in generate_docs(parse_module(example_source("fib")))


def test_uncontracted_docs_are_headers_only():
    text = generate_docs(parse_module(example_source("plain")))
    assert count_blocks(text) == 0
    assert text == "# Module `plain`\n\n## sum/1\n\n## double_all/1\n"
    assert generate_docs(parse_module(example_source("empty"))) == "# Module `empty`\n"


@pytest.mark.parametrize("path", sorted(EXAMPLES.glob("*.edl")), ids=lambda p: p.stem)
def test_docs_are_stable(path):
    src = path.read_text()
    assert generate_docs(parse_module(src)) == generate_docs(parse_module(src))
