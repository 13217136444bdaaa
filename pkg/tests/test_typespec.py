import itertools

import pytest
from hypothesis import given, strategies as st

from edbc.errors import ParseError
from edbc.typespec import (AnyT, AtomT, BooleanT, FloatT, IntegerT, ListT, LiteralAtomT,
                           NonNegIntegerT, NumberT, StringT, TupleT, UnionT, format_type,
                           parse_typespec, type_check)
from edbc.values import Atom, Pid

A, B = Atom("a"), Atom("b")


def test_parse_examples():
    assert parse_typespec("integer()") == IntegerT()
    assert parse_typespec("a | b") == UnionT((LiteralAtomT("a"), LiteralAtomT("b")))
    assert parse_typespec("{atom(), [integer()]}") == TupleT((AtomT(), ListT(IntegerT())))
    assert parse_typespec("list(number())") == ListT(NumberT())


@pytest.mark.parametrize("text", ["frob()", "fun()", "integer(", "{a"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_typespec(text)


def test_check_examples():
    assert not type_check(A, IntegerT())
    assert type_check(0, NonNegIntegerT())
    assert not type_check([1, Atom("x")], ListT(IntegerT()))
    assert not type_check(3.0, IntegerT())


# ---------------------------------------------------------------- oracle

def oracle(v, t) -> bool:
    """Membership written from the type names alone, independent of the checker."""
    name = type(t).__name__
    if name == "AnyT":
        return True
    if name == "UnionT":
        return any(oracle(v, a) for a in t.alternatives)
    if name == "ListT":
        return type(v) is list and all(oracle(x, t.elem) for x in v)
    if name == "TupleT":
        return type(v) is tuple and len(v) == len(t.elements) and all(
            oracle(x, e) for x, e in zip(v, t.elements))
    if name == "LiteralAtomT":
        text = {True: "true", False: "false"}.get(v) if type(v) is bool else getattr(v, "name", None)
        return type(v) in (bool, Atom) and text == t.name
    kinds = {
        "IntegerT": lambda: type(v) is int,
        "NonNegIntegerT": lambda: type(v) is int and v >= 0,
        "FloatT": lambda: type(v) is float,
        "NumberT": lambda: type(v) in (int, float),
        "BooleanT": lambda: type(v) is bool,
        "AtomT": lambda: type(v) in (bool, Atom),
        "StringT": lambda: type(v) is str,
    }
    return kinds[name]()


LEAF_VALUES = [-1, 0, 3, 1.5, 3.0, A, B, True, False, "", "ab"]
LEAF_TYPES = [AnyT(), IntegerT(), NonNegIntegerT(), FloatT(), NumberT(), BooleanT(), AtomT(),
              LiteralAtomT("a"), LiteralAtomT("true"), StringT()]


def values_depth2():
    vals = list(LEAF_VALUES)
    vals += [[], [0, 3], [A, 0], ["ab"], [True, False]]
    vals += [(), (0,), (A, 3), (A, B), (1.5, "ab"), ([0], A)]
    return vals


def types_depth2():
    ts = list(LEAF_TYPES)
    ts += [ListT(t) for t in LEAF_TYPES]
    ts += [TupleT(()), *[TupleT((t,)) for t in LEAF_TYPES]]
    ts += [TupleT((a, b)) for a, b in itertools.product(LEAF_TYPES[:7], repeat=2)]
    ts += [UnionT((a, b)) for a, b in itertools.combinations(LEAF_TYPES, 2)]
    return ts


def test_exhaustive_against_oracle():
    mismatches = [(v, format_type(t)) for v in values_depth2() for t in types_depth2()
                  if type_check(v, t) != oracle(v, t)]
    assert mismatches == []


any_value = st.recursive(
    st.one_of(st.integers(), st.floats(allow_nan=False), st.booleans(), st.text(max_size=3),
              st.sampled_from([A, B]), st.builds(Pid)),
    lambda c: st.one_of(st.lists(c, max_size=3), st.lists(c, max_size=3).map(tuple)),
    max_leaves=8,
)
any_type = st.recursive(
    st.sampled_from(LEAF_TYPES),
    lambda c: st.one_of(st.builds(ListT, c), st.lists(c, max_size=3).map(lambda x: TupleT(tuple(x))),
                        st.lists(c, min_size=2, max_size=3).map(lambda x: UnionT(tuple(x)))),
    max_leaves=6,
)


@given(any_value)
def test_any_accepts_everything(v):
    assert type_check(v, AnyT())


@given(any_value, st.lists(any_type, min_size=2, max_size=4))
def test_union_is_disjunction(v, ts):
    assert type_check(v, UnionT(tuple(ts))) == any(type_check(v, t) for t in ts)


@given(any_value)
def test_integer_implies_number(v):
    if type_check(v, IntegerT()):
        assert type_check(v, NumberT())


@given(any_value, any_type)
def test_matches_oracle(v, t):
    assert type_check(v, t) == oracle(v, t)


@given(any_type)
def test_format_parses_back(t):
    # nested unions print flat, so compare the printed forms
    text = format_type(t)
    assert format_type(parse_typespec(text)) == text
