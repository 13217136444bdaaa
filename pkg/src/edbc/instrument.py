"""Source-to-source instrumentation of contracted functions.

Each contracted function ``f/n`` is split into an entry point that records
the call, one wrapper per pre/post contract, the renamed original, and a
decrease checker when the function declares decreasing arguments. The
resulting call cycle for a recursive function is::

    f  ->  pre/post wrappers  ->  original  ->  decrease checker  ->  f
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ContractError
from .parser import check_contract_compat
from .syntax import (
    Call, Clause, Contract, Decreases, ExpectedTime, Expr, Fun, FunClause,
    FunDef, FunRefExpr, ListExpr, Lit, ModuleAst, PAlias, PCons,
    PLit, PNil, PTuple, PVar, ParamRef, Pattern, Post, Pre, Pure, ResultRef,
    Spec, Timeout, TupleExpr, Var,
)
from .typespec import format_type
from .values import Atom
from .walk import all_var_names, iter_nodes, transform

INVARIANT_TARGETS = {("init", 0), ("init", 1), ("handle_call", 3), ("handle_cast", 2)}

# runtime entry points called by generated code
PUT_INFO = "edbc_put_info"
PRE = "edbc_pre"
POST = "edbc_post"
DECREASE_CHECK = "edbc_decrease_check"
STATE_OF = "edbc_state"


class FreshNamer:
    """Hands out ``<base>__edbc<k>`` names that are not yet used in the module."""

    def __init__(self, module: ModuleAst):
        self.used = {f.name for f in module.fundefs}
        self.counters: dict[str, int] = {}

    def get_free_name(self, base: str) -> str:
        k = self.counters.get(base, 0)
        while True:
            name = f"{base}__edbc{k}"
            k += 1
            if name not in self.used:
                self.counters[base] = k
                self.used.add(name)
                return name


@dataclass
class InstrumentedModule:
    name: str
    module: ModuleAst
    entry_points: dict[tuple[str, int], str] = field(default_factory=dict)
    # (name, arity) -> (role, original function name)
    roles: dict[tuple[str, int], tuple[str, str]] = field(default_factory=dict)

    @property
    def fundefs(self) -> tuple[FunDef, ...]:
        return self.module.fundefs


class _Vars:
    """Fresh variable names for one function, clear of every user variable."""

    def __init__(self, taken: set[str]):
        prefix = "FV"
        while any(n.startswith(prefix) for n in taken):
            prefix += "_"
        self.prefix = prefix

    def arg(self, i: int) -> str:
        return f"{self.prefix}{i}"

    def args(self, n: int) -> tuple[Var, ...]:
        return tuple(Var(self.arg(i)) for i in range(1, n + 1))

    @property
    def res(self) -> str:
        return f"{self.prefix}Res"

    @property
    def prev(self) -> str:
        return f"{self.prefix}Prev"

    def whole(self, i: int) -> str:
        return f"{self.prefix}Arg{i}"


# ---------------------------------------------------------------- read_contracts


def _fun0(body: tuple[Expr, ...]) -> Fun:
    return Fun((FunClause((), None, body),))


def read_contracts(f: FunDef, module: Optional[ModuleAst] = None) -> list[Contract]:
    """Contracts of ``f`` lowered to Pre/Post form, plus at most one Decreases.

    The spec pair comes first, then the remaining contracts in source order,
    then the module invariant when ``f`` is a state-changing callback.
    """
    check_contract_compat(f)
    lowered: list[Contract] = []
    rest: list[Contract] = []
    for c in f.contracts:
        if isinstance(c, Spec):
            checks = tuple(
                TupleExpr((ParamRef(i + 1), Lit(format_type(t))))
                for i, t in enumerate(c.argtypes)
            )
            lowered.append(Pre(_fun0((ListExpr(checks),)), tag="spec"))
            lowered.append(Post(_fun0((TupleExpr((ResultRef(), Lit(format_type(c.rettype)))),)), tag="spec"))
        elif isinstance(c, ExpectedTime):
            rest.append(Pre(c.timefun, tag="expected_time"))
        elif isinstance(c, Timeout):
            rest.append(Pre(c.timefun, tag="timeout"))
        elif isinstance(c, Pure):
            rest.append(Pre(_fun0((Lit(True),)), tag="pure"))
        elif isinstance(c, (Pre, Post, Decreases)):
            rest.append(c)
        else:
            raise ContractError(f"unexpected contract {c!r} on {f.name}/{f.arity}")
    out = lowered + rest
    if module is not None and module.module_invariant is not None and f.key in INVARIANT_TARGETS:
        inv = module.module_invariant.invfun
        check = Call((Call((ResultRef(),), name=STATE_OF),), fun=inv)
        out.append(Post(_fun0((check,)), tag="invariant"))
    return out


# ---------------------------------------------------------------- helpers


def _condition_fun(cond: Expr, module: Optional[ModuleAst], fv: _Vars, with_result: bool) -> Fun:
    """Resolve ``fun name/0`` and substitute ?P(i) / ?R with fresh variables."""
    if isinstance(cond, FunRefExpr):
        target = module.get(cond.name, cond.arity) if module is not None else None
        if target is None:
            raise ContractError(f"contract refers to undefined function {cond.name}/{cond.arity}")
        first = target.clauses[0]
        cond = Fun((FunClause((), first.guard, first.body),))

    def subst(node):
        if isinstance(node, ParamRef):
            return Var(fv.arg(node.index))
        if isinstance(node, ResultRef):
            return Var(fv.res)
        return None

    fun = transform(cond, subst)
    if with_result:
        fun = Fun(tuple(FunClause((PVar(fv.res),), c.guard, c.body) for c in fun.clauses))
    return fun


def _tagged(tag: str, default: str, fun: Fun) -> Expr:
    if tag == default:
        return fun
    return TupleExpr((Lit(Atom(tag)), fun))


def _pattern_expr(p: Pattern) -> Optional[Expr]:
    if isinstance(p, PVar):
        return Var(p.name)
    if isinstance(p, PLit):
        return Lit(p.value)
    if isinstance(p, PNil):
        return ListExpr(())
    if isinstance(p, PTuple):
        parts = [_pattern_expr(x) for x in p.elements]
        return None if any(x is None for x in parts) else TupleExpr(tuple(parts))
    if isinstance(p, PCons):
        items = []
        cur: Pattern = p
        while isinstance(cur, PCons):
            h = _pattern_expr(cur.head)
            if h is None:
                return None
            items.append(h)
            cur = cur.tail
        if isinstance(cur, PNil):
            return ListExpr(tuple(items))
        t = _pattern_expr(cur)
        return None if t is None else ListExpr(tuple(items), t)
    if isinstance(p, PAlias):
        return _pattern_expr(p.left) or _pattern_expr(p.right)
    return None


def _wrapper(name: str, n: int, fv: _Vars, body: Expr) -> FunDef:
    return FunDef(name, n, (Clause(tuple(PVar(v.name) for v in fv.args(n)), None, (body,)),))


def _delayed(target: str, fv: _Vars, n: int) -> Fun:
    return _fun0((Call(fv.args(n), name=target),))


# ---------------------------------------------------------------- inst_*


def inst_put_info(f: FunDef, namer: FreshNamer, fv: Optional[_Vars] = None) -> tuple[FunDef, FunDef]:
    fv = fv or _Vars(all_var_names(f))
    fresh = namer.get_free_name(f.name)
    args = fv.args(f.arity)
    record = Call((Lit(Atom(f.name)), ListExpr(args)), name=PUT_INFO)
    entry = FunDef(
        f.name, f.arity,
        (Clause(tuple(PVar(v.name) for v in args), None, (record, Call(args, name=fresh))),),
    )
    return f.renamed(fresh), entry


def inst_decr(c: Decreases, f: FunDef, original_name: str, namer: FreshNamer,
              fv: Optional[_Vars] = None, module_name: Optional[str] = None) -> tuple[FunDef, FunDef]:
    fv = fv or _Vars(all_var_names(f))
    n = f.arity
    checker_name = namer.get_free_name(original_name)
    args = fv.args(n)
    next_list: Pattern = PNil()
    for v in reversed(args):
        next_list = PCons(PVar(v.name), next_list)
    checker = FunDef(checker_name, 2, (Clause(
        (PVar(fv.prev), next_list), None,
        (Call((
            Var(fv.prev),
            ListExpr(tuple(args[i - 1] for i in c.params)),
            Lit(c.strict),
            ListExpr(args),
            _fun0((Call(args, name=original_name),)),
        ), name=DECREASE_CHECK),),
    ),))

    def is_recursive_call(node) -> bool:
        return (isinstance(node, Call) and node.fun is None and node.name == original_name
                and (node.module is None or node.module == module_name) and len(node.args) == n)

    new_clauses = []
    for clause in f.clauses:
        if not any(is_recursive_call(x) for x in iter_nodes(clause.body)):
            new_clauses.append(clause)
            continue
        patterns = list(clause.patterns)
        prev_exprs = []
        for i in c.params:
            e = _pattern_expr(patterns[i - 1])
            if e is None:
                whole = fv.whole(i)
                patterns[i - 1] = PAlias(PVar(whole), patterns[i - 1])
                e = Var(whole)
            prev_exprs.append(e)
        prev = ListExpr(tuple(prev_exprs))

        def rewrite(node, prev=prev):
            if is_recursive_call(node):
                new_args = tuple(transform(a, rewrite) for a in node.args)
                return Call((prev, ListExpr(new_args)), name=checker_name)
            return None

        body = transform(clause.body, rewrite)
        new_clauses.append(Clause(tuple(patterns), clause.guard, body))
    return replace(f, clauses=tuple(new_clauses)), checker


def inst_pre(c: Pre, f: FunDef, namer: FreshNamer, fv: Optional[_Vars] = None,
             module: Optional[ModuleAst] = None) -> tuple[FunDef, FunDef]:
    fv = fv or _Vars(all_var_names(f))
    fresh = namer.get_free_name(_base(f.name))
    cond = _tagged(c.tag, "pre", _condition_fun(c.cond, module, fv, with_result=False))
    wrapper = _wrapper(f.name, f.arity, fv, Call((cond, _delayed(fresh, fv, f.arity)), name=PRE))
    return f.renamed(fresh), wrapper


def inst_post(c: Post, f: FunDef, namer: FreshNamer, fv: Optional[_Vars] = None,
              module: Optional[ModuleAst] = None) -> tuple[FunDef, FunDef]:
    fv = fv or _Vars(all_var_names(f))
    fresh = namer.get_free_name(_base(f.name))
    cond = _tagged(c.tag, "post", _condition_fun(c.cond, module, fv, with_result=True))
    wrapper = _wrapper(f.name, f.arity, fv, Call((cond, _delayed(fresh, fv, f.arity)), name=POST))
    return f.renamed(fresh), wrapper


def _base(name: str) -> str:
    return name.split("__edbc", 1)[0]


# ---------------------------------------------------------------- orchestration


def _strip(module: ModuleAst) -> ModuleAst:
    return replace(
        module,
        fundefs=tuple(replace(f, contracts=()) if f.contracts else f for f in module.fundefs),
        module_invariant=None,
    )


def instrument_module(module: ModuleAst, enabled: bool = True) -> InstrumentedModule:
    for f in module.fundefs:
        check_contract_compat(f)
    if not enabled:
        stripped = _strip(module)
        return InstrumentedModule(module.name, stripped, {f.key: f.name for f in stripped.fundefs})

    namer = FreshNamer(module)
    out: list[FunDef] = []
    entries: dict[tuple[str, int], str] = {}
    roles: dict[tuple[str, int], tuple[str, str]] = {}
    for f in module.fundefs:
        entries[f.key] = f.name
        contracts = read_contracts(f, module)
        if not contracts:
            out.append(f)
            continue
        taken = all_var_names(f)
        if module.module_invariant is not None:
            taken |= all_var_names(module.module_invariant)
        fv = _Vars(taken)
        original = f.name
        fdef, entry = inst_put_info(replace(f, contracts=()), namer, fv)
        funs = [entry]
        roles[entry.key] = ("entry", original)
        decr = next((c for c in contracts if isinstance(c, Decreases)), None)
        if decr is not None:
            fdef, checker = inst_decr(decr, fdef, original, namer, fv, module.name)
            funs.append(checker)
            roles[checker.key] = ("decrease", original)
        for c in contracts:
            if isinstance(c, Decreases):
                continue
            if isinstance(c, Pre):
                fdef, wrapper = inst_pre(c, fdef, namer, fv, module)
                roles[wrapper.key] = ("pre:" + c.tag, original)
            else:
                fdef, wrapper = inst_post(c, fdef, namer, fv, module)
                roles[wrapper.key] = ("post:" + c.tag, original)
            funs.append(wrapper)
        roles[fdef.key] = ("original", original)
        out.extend(funs)
        out.append(fdef)
    return InstrumentedModule(
        module.name, ModuleAst(module.name, tuple(out), None, module.attributes), entries, roles,
    )
