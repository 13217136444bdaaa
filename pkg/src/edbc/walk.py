"""Generic traversal over the frozen-dataclass AST."""
from __future__ import annotations

import dataclasses
from typing import Callable, Iterator

from .syntax import (
    Case, Clause, Fun, FunClause, ListComp, Match, PAlias, PCons, PTuple, PVar,
    Var,
)


def _children(node) -> Iterator:
    if isinstance(node, tuple):
        yield from node
        return
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if isinstance(v, tuple) or (dataclasses.is_dataclass(v) and not isinstance(v, type)):
                yield v


def iter_nodes(node) -> Iterator:
    stack = [node]
    while stack:
        n = stack.pop()
        if not isinstance(n, tuple):
            yield n
        stack.extend(_children(n))


def contains_node(node, types) -> bool:
    return any(isinstance(n, types) for n in iter_nodes(node))


def transform(node, fn: Callable):
    """Rebuild ``node`` top-down. ``fn`` returns a replacement or None to recurse."""
    if isinstance(node, tuple):
        return tuple(transform(x, fn) for x in node)
    if not dataclasses.is_dataclass(node) or isinstance(node, type):
        return node
    out = fn(node)
    if out is not None:
        return out
    changes = {}
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple) or (dataclasses.is_dataclass(v) and not isinstance(v, type)):
            nv = transform(v, fn)
            if nv is not v:
                changes[f.name] = nv
    return dataclasses.replace(node, **changes) if changes else node


def pattern_vars(p) -> set[str]:
    return {n.name for n in iter_nodes(p) if isinstance(n, PVar)}


def all_var_names(node) -> set[str]:
    return {n.name for n in iter_nodes(node) if isinstance(n, (Var, PVar))}


_free_cache: dict[int, tuple[object, frozenset]] = {}


def free_vars(node) -> frozenset[str]:
    """Variables referenced in ``node`` but not bound inside it.

    Over-approximates: callers intersect the result with the live
    environment, so an extra name only costs a dictionary lookup.
    """
    hit = _free_cache.get(id(node))
    if hit is not None and hit[0] is node:
        return hit[1]
    result = frozenset(_free(node, frozenset()))
    _free_cache[id(node)] = (node, result)
    return result


def _free(node, bound: frozenset) -> set[str]:
    if isinstance(node, Var):
        return set() if node.name in bound or node.name == "_" else {node.name}
    if isinstance(node, (Fun,)):
        out: set[str] = set()
        for c in node.clauses:
            out |= _free(c, bound)
        return out
    if isinstance(node, (FunClause, Clause)):
        inner = bound | pattern_vars(node.patterns)
        out = set()
        if node.guard is not None:
            out |= _free(node.guard, inner)
        out |= _free_seq(node.body, inner)
        return out
    if isinstance(node, Case):
        out = _free(node.scrutinee, bound)
        for c in node.clauses:
            inner = bound | pattern_vars(c.pattern)
            out |= _pattern_free(c.pattern, bound)
            if c.guard is not None:
                out |= _free(c.guard, inner)
            out |= _free_seq(c.body, inner)
        return out
    if isinstance(node, ListComp):
        out = _free(node.source, bound)
        inner = bound | pattern_vars(node.pattern)
        out |= _free(node.template, inner)
        for f in node.filters:
            out |= _free(f, inner)
        return out
    if isinstance(node, Match):
        return _free(node.expr, bound) | _pattern_free(node.pattern, bound)
    if isinstance(node, (PVar, PAlias, PCons, PTuple)):
        return _pattern_free(node, bound)
    if isinstance(node, tuple):
        return _free_seq(node, bound)
    out = set()
    for ch in _children(node):
        out |= _free(ch, bound)
    return out


def _pattern_free(p, bound) -> set[str]:
    # may be a constraint on a captured binding; capturing it is harmless
    return {n for n in pattern_vars(p) if n not in bound}


def _free_seq(exprs, bound: frozenset) -> set[str]:
    out: set[str] = set()
    for e in exprs:
        out |= _free(e, bound)
        bound = bound | _bound_by(e)
    return out


def _bound_by(e) -> frozenset:
    if isinstance(e, Match):
        return frozenset(pattern_vars(e.pattern)) | _bound_by(e.expr)
    return frozenset()
