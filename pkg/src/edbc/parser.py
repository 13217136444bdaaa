"""Recursive-descent parser for ``.edl`` modules and standalone expressions."""
from __future__ import annotations

from typing import Optional

from .errors import ContractError, ParseError, PlacementError, ValidationError
from .lexer import Token, tokenize
from .syntax import (
    Attribute, BinOp, Call, Case, CaseClause, Clause, Contract,
    Decreases, ExpectedTime, Expr, Fun, FunClause, FunDef, FunRefExpr, If,
    IfClause, Invariant, ListComp, ListExpr, Lit, Match, ModuleAst, PAlias,
    PCons, PLit, PNil, PTuple, PVar, ParamRef, Pattern, Post, Pre, Pure,
    ResultRef, Spec, Timeout, TupleExpr, UnOp, Var, Wildcard,
)
from .typespec import parse_type_at
from .values import Atom
from .walk import contains_node, iter_nodes

COMPARISON = ("==", "/=", "=:=", "=/=", "<", "=<", ">", ">=")

DECREASE_MACROS = {
    "DECREASE": False, "DECREASES": False,
    "SDECREASE": True, "SDECREASES": True,
}

RESERVED_PREFIX = "edbc_"


class Parser:
    def __init__(self, source: str, module_name: Optional[str] = None):
        self.tokens = tokenize(source)
        self.pos = 0
        self.module_name = module_name

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None, cls=ParseError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if not self.tok.is_punct(text):
            raise self.error(f"expected {text!r}, found {self.tok.describe()}")
        return self.advance()

    def expect_kw(self, text: str) -> Token:
        if not self.tok.is_kw(text):
            raise self.error(f"expected '{text}', found {self.tok.describe()}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.tok.is_punct(text):
            self.pos += 1
            return True
        return False

    # -- expressions

    def parse_body(self) -> tuple[Expr, ...]:
        exprs = [self.parse_expr()]
        while self.accept(","):
            exprs.append(self.parse_expr())
        return tuple(exprs)

    def parse_expr(self) -> Expr:
        lhs = self.parse_orelse()
        if self.tok.is_punct("="):
            tok = self.advance()
            rhs = self.parse_expr()
            return Match(to_pattern(lhs, tok), rhs)
        return lhs

    def parse_orelse(self) -> Expr:
        lhs = self.parse_andalso()
        if self.tok.is_kw("orelse"):
            self.advance()
            return BinOp("orelse", lhs, self.parse_orelse())
        return lhs

    def parse_andalso(self) -> Expr:
        lhs = self.parse_comparison()
        if self.tok.is_kw("andalso"):
            self.advance()
            return BinOp("andalso", lhs, self.parse_andalso())
        return lhs

    def parse_comparison(self) -> Expr:
        lhs = self.parse_listop()
        if self.tok.kind == "punct" and self.tok.value in COMPARISON:
            op = self.advance().value
            rhs = self.parse_listop()
            if self.tok.kind == "punct" and self.tok.value in COMPARISON:
                raise self.error("comparison operators are non-associative")
            return BinOp(op, lhs, rhs)
        return lhs

    def parse_listop(self) -> Expr:
        lhs = self.parse_additive()
        if self.tok.kind == "punct" and self.tok.value in ("++", "--"):
            op = self.advance().value
            return BinOp(op, lhs, self.parse_listop())
        return lhs

    def parse_additive(self) -> Expr:
        lhs = self.parse_multiplicative()
        while self.tok.kind == "punct" and self.tok.value in ("+", "-"):
            op = self.advance().value
            lhs = BinOp(op, lhs, self.parse_multiplicative())
        return lhs

    def parse_multiplicative(self) -> Expr:
        lhs = self.parse_unary()
        while (self.tok.kind == "punct" and self.tok.value in ("*", "/")) or (
            self.tok.kind == "kw" and self.tok.value in ("div", "rem")
        ):
            op = self.advance().value
            lhs = BinOp(op, lhs, self.parse_unary())
        return lhs

    def parse_unary(self) -> Expr:
        if self.tok.is_punct("-") or self.tok.is_punct("+"):
            op = self.advance().value
            operand = self.parse_unary()
            if isinstance(operand, Lit) and isinstance(operand.value, (int, float)) \
                    and not isinstance(operand.value, bool):
                return Lit(-operand.value if op == "-" else operand.value)
            return UnOp(op, operand)
        if self.tok.is_kw("not"):
            self.advance()
            return UnOp("not", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        tok = self.tok
        if tok.kind == "atom" and (self.peek().is_punct("(") or self.peek().is_punct(":")):
            return self.parse_named_call()
        if tok.kind == "macro" and tok.value == "MODULE" and self.peek().is_punct(":"):
            return self.parse_named_call()
        expr = self.parse_primary()
        while self.tok.is_punct("("):
            expr = Call(self.parse_args(), fun=expr)
        return expr

    def parse_named_call(self) -> Expr:
        first = self.advance()
        name = self.module_name if first.kind == "macro" else first.value
        if first.kind == "macro" and name is None:
            raise self.error("?MODULE used before -module", first)
        if self.accept(":"):
            name_tok = self.advance()
            if name_tok.kind != "atom":
                raise self.error("expected function name after ':'", name_tok)
            args = self.parse_args()
            expr: Expr = Call(args, name=name_tok.value, module=name)
        else:
            expr = Call(self.parse_args(), name=name)
        while self.tok.is_punct("("):
            expr = Call(self.parse_args(), fun=expr)
        return expr

    def parse_args(self) -> tuple[Expr, ...]:
        self.expect("(")
        if self.accept(")"):
            return ()
        args = [self.parse_expr()]
        while self.accept(","):
            args.append(self.parse_expr())
        self.expect(")")
        return tuple(args)

    def parse_primary(self) -> Expr:
        tok = self.tok
        if tok.kind in ("int", "float", "string"):
            self.advance()
            return Lit(tok.value)
        if tok.kind == "atom":
            self.advance()
            if tok.value == "true":
                return Lit(True)
            if tok.value == "false":
                return Lit(False)
            return Lit(Atom(tok.value))
        if tok.kind == "var":
            self.advance()
            return Var(tok.value)
        if tok.kind == "macro":
            return self.parse_macro_expr()
        if tok.is_punct("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if tok.is_punct("{"):
            self.advance()
            if self.accept("}"):
                return TupleExpr(())
            elems = [self.parse_expr()]
            while self.accept(","):
                elems.append(self.parse_expr())
            self.expect("}")
            return TupleExpr(tuple(elems))
        if tok.is_punct("["):
            return self.parse_list()
        if tok.is_kw("fun"):
            return self.parse_fun()
        if tok.is_kw("case"):
            return self.parse_case()
        if tok.is_kw("if"):
            return self.parse_if()
        if tok.is_kw("begin"):
            self.advance()
            body = self.parse_body()
            self.expect_kw("end")
            if len(body) != 1:
                raise self.error("begin ... end blocks must hold a single expression", tok)
            return body[0]
        raise self.error(f"unexpected {tok.describe()}")

    def parse_macro_expr(self) -> Expr:
        tok = self.advance()
        if tok.value == "P":
            self.expect("(")
            idx = self.advance()
            if idx.kind != "int":
                raise self.error("?P expects an integer position", idx)
            self.expect(")")
            return ParamRef(idx.value)
        if tok.value == "R":
            return ResultRef()
        if tok.value == "MODULE":
            if self.module_name is None:
                raise self.error("?MODULE used before -module", tok)
            return Lit(Atom(self.module_name))
        raise self.error(f"macro ?{tok.value} is not allowed in an expression", tok)

    def parse_list(self) -> Expr:
        self.expect("[")
        if self.accept("]"):
            return ListExpr(())
        first = self.parse_expr()
        if self.accept("||"):
            pat_expr = self.parse_orelse()
            arrow = self.expect("<-")
            source = self.parse_expr()
            filters = []
            while self.accept(","):
                filters.append(self.parse_expr())
            self.expect("]")
            return ListComp(first, to_pattern(pat_expr, arrow), source, tuple(filters))
        elems = [first]
        while self.accept(","):
            elems.append(self.parse_expr())
        tail = None
        if self.accept("|"):
            tail = self.parse_expr()
        self.expect("]")
        return ListExpr(tuple(elems), tail)

    def parse_fun(self) -> Expr:
        self.expect_kw("fun")
        tok = self.tok
        if tok.kind == "atom" or (tok.kind == "macro" and tok.value == "MODULE"):
            first = self.advance()
            first_name = self.module_name if first.kind == "macro" else first.value
            module = None
            if self.accept(":"):
                module = first_name
                name_tok = self.advance()
                if name_tok.kind != "atom":
                    raise self.error("expected function name", name_tok)
                name = name_tok.value
            else:
                name = first_name
            self.expect("/")
            ar = self.advance()
            if ar.kind != "int":
                raise self.error("expected arity", ar)
            return FunRefExpr(name, ar.value, module)
        clauses = [self.parse_fun_clause()]
        while self.accept(";"):
            clauses.append(self.parse_fun_clause())
        self.expect_kw("end")
        arities = {len(c.patterns) for c in clauses}
        if len(arities) != 1:
            raise self.error("fun clauses differ in arity", tok)
        return Fun(tuple(clauses))

    def parse_fun_clause(self) -> FunClause:
        start = self.tok
        args = self.parse_args()
        patterns = tuple(to_pattern(a, start) for a in args)
        guard = self.parse_guard()
        self.expect("->")
        return FunClause(patterns, guard, self.parse_body())

    def parse_guard(self) -> Optional[Expr]:
        if not self.tok.is_kw("when"):
            return None
        self.advance()
        return self.parse_guard_seq()

    def parse_guard_seq(self) -> Expr:
        guard = self.parse_expr()
        parts = [guard]
        while self.accept(","):
            parts.append(self.parse_expr())
        result = parts[-1]
        for g in reversed(parts[:-1]):
            result = BinOp("andalso", g, result)
        return result

    def parse_case(self) -> Expr:
        self.expect_kw("case")
        scrutinee = self.parse_expr()
        self.expect_kw("of")
        clauses = []
        while True:
            start = self.tok
            pat = to_pattern(self.parse_expr(), start)
            guard = self.parse_guard()
            self.expect("->")
            clauses.append(CaseClause(pat, guard, self.parse_body()))
            if not self.accept(";"):
                break
        self.expect_kw("end")
        return Case(scrutinee, tuple(clauses))

    def parse_if(self) -> Expr:
        self.expect_kw("if")
        clauses = []
        while True:
            guard = self.parse_guard_seq()
            self.expect("->")
            clauses.append(IfClause(guard, self.parse_body()))
            if not self.accept(";"):
                break
        self.expect_kw("end")
        return If(tuple(clauses))

    # -- module level

    def parse_module(self) -> ModuleAst:
        if not (self.tok.is_punct("-") and self.peek().kind == "atom" and self.peek().value == "module"):
            raise self.error("a module must start with -module(Name).")
        self.advance()
        self.advance()
        self.expect("(")
        name_tok = self.advance()
        if name_tok.kind != "atom":
            raise self.error("expected module name", name_tok)
        self.module_name = name_tok.value
        self.expect(")")
        self.expect(".")

        fundefs: list[dict] = []  # mutable drafts: name, arity, clauses, contracts, posts
        pending: list[tuple[Contract, Token]] = []
        last_fun: Optional[dict] = None
        specs: list[tuple[str, int, Spec, Token]] = []
        attributes: list[Attribute] = []
        invariant: Optional[Invariant] = None

        while self.tok.kind != "eof":
            tok = self.tok
            if tok.is_punct("-"):
                kind, payload = self.parse_attribute()
                if kind == "spec":
                    specs.append((*payload, tok))
                elif kind == "attr":
                    attributes.append(payload)
                continue
            if tok.kind == "macro":
                contract = self.parse_directive()
                if isinstance(contract, Invariant):
                    if invariant is not None:
                        raise self.error("duplicate ?INVARIANT", tok, ValidationError)
                    invariant = contract
                elif isinstance(contract, Post):
                    if last_fun is None or pending:
                        raise self.error(
                            "?POST must follow the last clause of the function it constrains",
                            tok, PlacementError,
                        )
                    last_fun["posts"].append((contract, tok))
                else:
                    pending.append((contract, tok))
                    last_fun = None
                continue
            if tok.kind == "atom":
                draft = self.parse_function()
                draft["pre"] = pending
                pending = []
                fundefs.append(draft)
                last_fun = draft
                continue
            raise self.error(f"unexpected {tok.describe()} at top level")

        if pending:
            c, t = pending[0]
            raise self.error(
                f"?{_directive_name(c)} must be placed before the first clause of a function",
                t, PlacementError,
            )

        seen: dict[tuple[str, int], Token] = {}
        for d in fundefs:
            key = (d["name"], d["arity"])
            if key in seen:
                raise self.error(f"function {key[0]}/{key[1]} defined twice", d["tok"], ValidationError)
            seen[key] = d["tok"]
            if d["name"].startswith(RESERVED_PREFIX):
                raise self.error(f"function names starting with {RESERVED_PREFIX!r} are reserved",
                                 d["tok"], ValidationError)

        spec_by_key: dict[tuple[str, int], Spec] = {}
        for name, arity, spec, tok in specs:
            if (name, arity) not in seen:
                raise self.error(f"-spec for undefined function {name}/{arity}", tok, ValidationError)
            if (name, arity) in spec_by_key:
                raise self.error(f"duplicate -spec for {name}/{arity}", tok, ValidationError)
            spec_by_key[(name, arity)] = spec

        result = []
        for d in fundefs:
            contracts: list[Contract] = []
            key = (d["name"], d["arity"])
            if key in spec_by_key:
                contracts.append(spec_by_key[key])
            contracts.extend(c for c, _ in d["pre"])
            contracts.extend(c for c, _ in d["posts"])
            result.append(FunDef(d["name"], d["arity"], tuple(d["clauses"]), tuple(contracts)))

        module = ModuleAst(self.module_name, tuple(result), invariant, tuple(attributes))
        validate_module(module, positions={k: (t.line, t.column) for k, t in seen.items()})
        return module

    def parse_attribute(self):
        self.expect("-")
        name_tok = self.advance()
        if name_tok.kind != "atom":
            raise self.error("expected attribute name", name_tok)
        name = name_tok.value
        if name == "spec":
            fname = self.advance()
            if fname.kind != "atom":
                raise self.error("expected function name in -spec", fname)
            self.expect("(")
            argtypes = []
            if not self.tok.is_punct(")"):
                t, self.pos = parse_type_at(self.tokens, self.pos)
                argtypes.append(t)
                while self.accept(","):
                    t, self.pos = parse_type_at(self.tokens, self.pos)
                    argtypes.append(t)
            self.expect(")")
            self.expect("->")
            ret, self.pos = parse_type_at(self.tokens, self.pos)
            self.expect(".")
            return "spec", (fname.value, len(argtypes), Spec(tuple(argtypes), ret))
        if name == "module":
            raise self.error("only one -module attribute is allowed", name_tok)
        self.expect("(")
        start = self.tok
        value_expr = self.parse_expr()
        self.expect(")")
        self.expect(".")
        return "attr", Attribute(name, _attribute_value(value_expr, start))

    def parse_directive(self) -> Contract:
        tok = self.advance()
        name = tok.value
        if name == "PURE":
            if self.accept("("):
                self.expect(")")
            self.expect(".")
            return Pure()
        if name not in ("PRE", "POST", "EXPECTED_TIME", "TIMEOUT", "INVARIANT") and name not in DECREASE_MACROS:
            raise self.error(f"unknown directive ?{name}", tok)
        self.expect("(")
        arg_tok = self.tok
        arg = self.parse_expr()
        self.expect(")")
        self.expect(".")
        if name in DECREASE_MACROS:
            if isinstance(arg, ParamRef):
                refs = [arg]
            elif isinstance(arg, ListExpr) and arg.tail is None and arg.elements \
                    and all(isinstance(e, ParamRef) for e in arg.elements):
                refs = list(arg.elements)
            else:
                raise self.error(f"?{name} expects ?P(i) or a list of them", arg_tok)
            idx = tuple(r.index for r in refs)
            if len(set(idx)) != len(idx):
                raise self.error(f"?{name} lists a parameter twice", arg_tok, ValidationError)
            return Decreases(idx, DECREASE_MACROS[name])
        if name == "INVARIANT":
            if not _is_fun_of_arity(arg, 1):
                raise self.error("?INVARIANT expects a function of one argument", arg_tok)
            return Invariant(arg)
        if not _is_fun_of_arity(arg, 0):
            raise self.error(f"?{name} expects a function without parameters", arg_tok)
        if isinstance(arg, FunRefExpr) and arg.module is not None:
            raise self.error(f"?{name} accepts only local function references", arg_tok)
        return {"PRE": Pre, "POST": Post, "EXPECTED_TIME": ExpectedTime, "TIMEOUT": Timeout}[name](arg)

    def parse_function(self) -> dict:
        first = self.tok
        name = first.value
        clauses = []
        while True:
            head = self.advance()
            if head.kind != "atom" or head.value != name:
                raise self.error(
                    f"clause for {head.value!r} inside the definition of {name!r}", head
                )
            args = self.parse_args()
            patterns = tuple(to_pattern(a, head) for a in args)
            guard = self.parse_guard()
            self.expect("->")
            body = self.parse_body()
            clauses.append(Clause(patterns, guard, body))
            if self.accept(";"):
                continue
            self.expect(".")
            break
        arity = len(clauses[0].patterns)
        if any(len(c.patterns) != arity for c in clauses):
            raise self.error(f"clauses of {name} differ in arity", first)
        return {"name": name, "arity": arity, "clauses": clauses, "posts": [], "pre": [], "tok": first}


def _directive_name(c: Contract) -> str:
    if isinstance(c, Decreases):
        return ("SDECREASES" if c.strict else "DECREASES")
    return {Pre: "PRE", ExpectedTime: "EXPECTED_TIME", Timeout: "TIMEOUT", Pure: "PURE"}.get(type(c), "PRE")


def _is_fun_of_arity(e: Expr, arity: int) -> bool:
    if isinstance(e, Fun):
        return len(e.clauses[0].patterns) == arity
    if isinstance(e, FunRefExpr):
        return e.arity == arity
    return False


def _attribute_value(e: Expr, tok: Token):
    """Attribute payloads are constant terms; ``f/1`` pairs become tuples."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, ListExpr) and e.tail is None:
        return [_attribute_value(x, tok) for x in e.elements]
    if isinstance(e, TupleExpr):
        return tuple(_attribute_value(x, tok) for x in e.elements)
    if isinstance(e, BinOp) and e.op == "/" and isinstance(e.lhs, Lit) and isinstance(e.rhs, Lit):
        return (e.lhs.value, e.rhs.value)
    raise ParseError("attribute values must be constant terms", tok.line, tok.column)


def to_pattern(e: Expr, tok: Token) -> Pattern:
    if isinstance(e, Var):
        return Wildcard() if e.name == "_" else PVar(e.name)
    if isinstance(e, Lit):
        return PLit(e.value)
    if isinstance(e, TupleExpr):
        return PTuple(tuple(to_pattern(x, tok) for x in e.elements))
    if isinstance(e, ListExpr):
        tail = PNil() if e.tail is None else to_pattern(e.tail, tok)
        for x in reversed(e.elements):
            tail = PCons(to_pattern(x, tok), tail)
        return tail
    if isinstance(e, Match):
        return PAlias(e.pattern, to_pattern(e.expr, tok))
    raise ParseError("illegal pattern", tok.line, tok.column)


# ---------------------------------------------------------------- validation


def contract_functions(module: ModuleAst) -> dict[tuple[str, int], list[tuple[FunDef, Contract]]]:
    """Named functions referenced as ``fun name/0`` by contract directives."""
    refs: dict[tuple[str, int], list] = {}
    for f in module.fundefs:
        for c in f.contracts:
            body = getattr(c, "cond", None) or getattr(c, "timefun", None)
            if isinstance(body, FunRefExpr) and body.module is None:
                refs.setdefault((body.name, body.arity), []).append((f, c))
    return refs


def _check_refs(expr, arity: int, allow_result: bool, where: str, pos) -> None:
    for node in iter_nodes(expr):
        if isinstance(node, ParamRef) and not (1 <= node.index <= arity):
            raise ValidationError(
                f"?P({node.index}) out of range for {where} (arity {arity})", *pos)
        if isinstance(node, ResultRef) and not allow_result:
            raise ValidationError(f"?R is only allowed in postconditions ({where})", *pos)


def validate_module(module: ModuleAst, positions: Optional[dict] = None) -> None:
    positions = positions or {}
    keys = module.keys()
    if len(keys) != len(module.fundefs):
        raise ValidationError("duplicate function definitions")
    cfuns = contract_functions(module)
    for key, owners in cfuns.items():
        target = module.get(*key)
        if target is None:
            f, _ = owners[0]
            raise ValidationError(
                f"contract of {f.name}/{f.arity} refers to undefined {key[0]}/{key[1]}",
                *positions.get(f.key, (None, None)))
        if target.contracts:
            raise ValidationError(
                f"contract function {key[0]}/{key[1]} may not carry contracts itself",
                *positions.get(key, (None, None)))
        for f, c in owners:
            for clause in target.clauses:
                for e in clause.body:
                    _check_refs(e, f.arity, isinstance(c, Post), f"{f.name}/{f.arity}",
                                positions.get(key, (None, None)))

    for f in module.fundefs:
        pos = positions.get(f.key, (None, None))
        check_contract_compat(f)
        if f.key not in cfuns:
            for clause in f.clauses:
                if any(contains_node(e, (ParamRef, ResultRef)) for e in clause.body) or (
                    clause.guard is not None and contains_node(clause.guard, (ParamRef, ResultRef))
                ):
                    raise ValidationError(
                        f"?P/?R may only appear inside contracts ({f.name}/{f.arity})", *pos)
        for c in f.contracts:
            if isinstance(c, Decreases):
                for i in c.params:
                    if not 1 <= i <= f.arity:
                        raise ValidationError(
                            f"?P({i}) out of range for {f.name}/{f.arity}", *pos)
            elif isinstance(c, (Pre, ExpectedTime, Timeout)):
                _check_refs(getattr(c, "cond", None) or c.timefun, f.arity, False,
                            f"{f.name}/{f.arity}", pos)
            elif isinstance(c, Post):
                _check_refs(c.cond, f.arity, True, f"{f.name}/{f.arity}", pos)
            elif isinstance(c, Spec) and len(c.argtypes) != f.arity:
                raise ValidationError(f"-spec arity mismatch for {f.name}/{f.arity}", *pos)
    if module.module_invariant is not None:
        if contains_node(module.module_invariant.invfun, (ParamRef, ResultRef)):
            raise ValidationError("?P/?R may not appear in ?INVARIANT")


def check_contract_compat(f: FunDef) -> None:
    kinds = [type(c) for c in f.contracts]
    if Pure in kinds and (ExpectedTime in kinds or Timeout in kinds):
        raise ContractError(
            f"{f.name}/{f.arity}: ?PURE is not compatible with execution-time contracts")
    if kinds.count(Decreases) > 1:
        raise ContractError(f"{f.name}/{f.arity}: at most one decreasing-argument contract")
    if kinds.count(Pure) > 1:
        raise ContractError(f"{f.name}/{f.arity}: duplicate ?PURE")
    if Invariant in kinds:
        raise ContractError(f"{f.name}/{f.arity}: ?INVARIANT belongs to the module")


# ---------------------------------------------------------------- entry points


def parse_module(source: str) -> ModuleAst:
    return Parser(source).parse_module()


def parse_expr(source: str, module_name: Optional[str] = None) -> Expr:
    p = Parser(source, module_name)
    e = p.parse_expr()
    if p.tok.kind != "eof":
        raise p.error(f"trailing {p.tok.describe()}")
    return e


def parse_terms(source: str) -> list[Expr]:
    """Parse a comma-separated list of expressions (CLI ``--args``)."""
    if not source.strip():
        return []
    p = Parser(source)
    exprs = [p.parse_expr()]
    while p.accept(","):
        exprs.append(p.parse_expr())
    if p.tok.kind != "eof":
        raise p.error(f"trailing {p.tok.describe()}")
    return exprs
