"""Elaboration of surface programs into core terms.

The surface language lets values and computations mix freely.  Elaboration
makes every sequencing point explicit:

* a value-like expression in computation position becomes `return v`;
* a computation in value position is bound to a fresh temporary with `do`,
  evaluating left to right;
* `op l v` gains the continuation `(y. return y)` and `sc l v (y. c)` gains
  `(z. return z)`;
* `a <> b` becomes `op choose () (b. if b then a else b)`;
* a bare `c1; c2` binds the result of `c1` to the wildcard;
* `bind` clauses are rewritten into `fwd` clauses;
* multi-equation definitions become curried lambdas over a `case`;
* a case guard falls through to the remaining alternatives.

Parameterless top-level definitions whose body is a computation are kept as
named computations and inlined where they are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from typing import Callable, Optional

from .diagnostics import Diagnostic, StaticError
from .parser import (
    DData, DDef, DEffect, DSig, SAbsurd, SApp, SBin, SCase, SDo, SExpr, SHandler, SIf,
    SLam, SLet, SList, SLit, SOp, SReturn, SRow, SSc, SScheme, STuple, SUnit, SVar,
    SWith, SurfaceProgram,
)
from .syntax import (
    WILD, Absurd, App, BindClause, BothBindAndFwd, Case, Comp, Con, CtorDecl, DataDecl,
    Do, FwdClause, Handle, Handler, HandlerVal, If, Lam, Let, Lit, Op, OpClause, PCon,
    PPair, PVar, PWild, Pair, Pattern, Prim, Program, RetClause, Return, Sc,
    ScClause, TopDef, Unit, Value, Var, desugar_bind, fresh_name, pattern_vars,
)
from .types import (
    CompType, OpSig, RVar, Row, Scheme, STRING, TApp, TCon, TFun, THandler, TLam, TPair,
    TVar, frv, ftv,
)

BUILTIN_TYPES = {"Unit": 0, "Int": 0, "Bool": 0, "Char": 0, "Empty": 0, "List": 1, "Sum": 2,
                 "String": 0}
BINARY_PRIMS = {"+", "-", "*", "=", ">", "<", ">=", "<=", "++"}
UNARY_PRIMS = {"head", "read", "not"}


@dataclass(frozen=True)
class CtorInfo:
    name: str
    datatype: str
    params: tuple
    args: tuple  # field types over params


def _builtin_ctors() -> dict:
    a, b = TVar("a"), TVar("b")
    return {
        "[]": CtorInfo("[]", "List", ("a",), ()),
        "::": CtorInfo("::", "List", ("a",), (a, TCon("List", (a,)))),
        "left": CtorInfo("left", "Sum", ("a", "b"), (a,)),
        "right": CtorInfo("right", "Sum", ("a", "b"), (b,)),
    }


def _err(kind: str, span, note: str, expected=None, actual=None):
    raise StaticError(Diagnostic(kind, span, expected, actual, note))


@dataclass
class Tables:
    """Declarations visible to elaboration; extended as files are loaded."""

    effects: dict = field(default_factory=dict)  # label -> OpSig
    datatypes: dict = field(default_factory=lambda: dict(BUILTIN_TYPES))  # name -> arity
    data_decls: dict = field(default_factory=dict)  # name -> DataDecl
    ctors: dict = field(default_factory=_builtin_ctors)
    sigs: dict = field(default_factory=dict)  # name -> Scheme
    comps: dict = field(default_factory=dict)  # name -> Comp
    globals: dict = field(default_factory=dict)  # name -> Value

    def copy(self) -> "Tables":
        return Tables(dict(self.effects), dict(self.datatypes), dict(self.data_decls),
                      dict(self.ctors), dict(self.sigs), dict(self.comps), dict(self.globals))


class Elaborator:
    def __init__(self, tables: Optional[Tables] = None):
        self.t = tables.copy() if tables is not None else Tables()
        self.counter = 0
        self.avoid: set = set()
        self.diagnostics: list = []

    # --- types

    def resolve_row(self, r, span=None) -> Row:
        if isinstance(r, Row):
            return r
        names = list(r.names)
        tail = None
        if names and names[-1] not in self.t.effects:
            tail = RVar(names.pop())
        for n in names:
            if n not in self.t.effects:
                _err("UnknownLabel", span, f"unknown effect label {n}")
        return Row(tuple(names), tail)

    def resolve_type(self, t, span=None):
        if isinstance(t, TCon):
            if t.name == "String" and not t.args:
                return STRING
            arity = self.t.datatypes.get(t.name)
            if arity is None:
                _err("UnboundVar", span, f"unknown type constructor {t.name}")
            if arity != len(t.args):
                _err("AnnotationArity", span,
                     f"type constructor {t.name} expects {arity} arguments",
                     str(arity), str(len(t.args)))
            return TCon(t.name, tuple(self.resolve_type(a, span) for a in t.args))
        if isinstance(t, TPair):
            return TPair(self.resolve_type(t.fst, span), self.resolve_type(t.snd, span))
        if isinstance(t, TFun):
            return TFun(self.resolve_type(t.arg, span), self.resolve_type(t.res, span))
        if isinstance(t, THandler):
            return THandler(self.resolve_type(t.src, span), self.resolve_type(t.dst, span))
        if isinstance(t, TLam):
            return TLam(t.param, self.resolve_type(t.body, span))
        if isinstance(t, TApp):
            return TApp(self.resolve_type(t.fn, span), self.resolve_type(t.arg, span))
        if isinstance(t, CompType):
            return CompType(self.resolve_type(t.value, span), self.resolve_row(t.row, span))
        if isinstance(t, (SRow, Row)):
            return self.resolve_row(t, span)
        return t

    def resolve_scheme(self, s: SScheme, span=None) -> Scheme:
        body = self.resolve_type(s.body, span)
        tv, rv = ftv(body), frv(body)
        if s.quantified is None:
            return Scheme(tuple(sorted(tv)), tuple(sorted(rv)), body)
        qs = list(s.quantified)
        tq = [q for q in qs if q not in rv]
        rq = [q for q in qs if q in rv]
        # variables left unquantified are quantified implicitly
        tq += sorted(tv - set(qs))
        rq += sorted(rv - set(qs))
        return Scheme(tuple(tq), tuple(rq), body)

    # --- names

    def fresh(self, base: str = "_t") -> str:
        while True:
            self.counter += 1
            name = f"{base}{self.counter}"
            if name not in self.avoid:
                return name

    def _reserve(self, tree) -> None:
        """Keep temporaries distinct from underscore names written in the source."""
        stack = [tree]
        while stack:
            t = stack.pop()
            if isinstance(t, str):
                if t.startswith("_"):
                    self.avoid.add(t)
            elif isinstance(t, (tuple, list)):
                stack.extend(t)
            elif is_dataclass(t) and not isinstance(t, type):
                stack.extend(getattr(t, f.name) for f in fields(t) if f.name != "span")

    def _ctor_wrapper(self, info: CtorInfo, have: list) -> Value:
        missing = len(info.args) - len(have)
        names = [self.fresh("_c") for _ in range(missing)]
        body: Comp = Return(Con(info.name, tuple(have) + tuple(Var(n) for n in names)))
        for n in reversed(names[1:]):
            body = Return(Lam(PVar(n), body))
        return Lam(PVar(names[0]), body)

    def resolve_pattern(self, p: Pattern) -> Pattern:
        if isinstance(p, PVar):
            info = self.t.ctors.get(p.name)
            if info is not None and not info.args:
                return PCon(p.name, (), span=p.span)
            return p
        if isinstance(p, PPair):
            return PPair(self.resolve_pattern(p.fst), self.resolve_pattern(p.snd), span=p.span)
        if isinstance(p, PCon):
            info = self.t.ctors.get(p.name)
            if info is None:
                _err("UnboundVar", p.span, f"unknown constructor {p.name}")
            if len(info.args) != len(p.args):
                _err("AnnotationArity", p.span, f"constructor {p.name} expects "
                     f"{len(info.args)} arguments", str(len(info.args)), str(len(p.args)))
            return PCon(p.name, tuple(self.resolve_pattern(a) for a in p.args), span=p.span)
        return p

    # --- value-likeness

    def _app_spine(self, e: SExpr):
        args = []
        while isinstance(e, SApp):
            args.append(e.arg)
            e = e.fn
        return e, list(reversed(args))

    def value_like(self, e: SExpr, scope: frozenset) -> bool:
        if isinstance(e, SVar):
            return e.name in scope or e.name not in self.t.comps
        if isinstance(e, (SLit, SUnit, SLam, SHandler)):
            return True
        if isinstance(e, (STuple, SList)):
            return all(self.value_like(i, scope) for i in e.items)
        if isinstance(e, SBin) and e.op == "::":
            return self.value_like(e.left, scope) and self.value_like(e.right, scope)
        if isinstance(e, SApp):
            head, args = self._app_spine(e)
            if isinstance(head, SVar) and head.name not in scope and head.name in self.t.ctors:
                info = self.t.ctors[head.name]
                return len(args) <= len(info.args) and all(self.value_like(a, scope) for a in args)
        return False

    # --- values (continuation-passing, so computations get sequenced)

    def val(self, e: SExpr, scope: frozenset, k: Callable[[Value], Comp]) -> Comp:
        sp = getattr(e, "span", None)
        if isinstance(e, SVar):
            if e.name in scope:
                return k(Var(e.name, span=sp))
            if e.name in self.t.ctors:
                info = self.t.ctors[e.name]
                if not info.args:
                    return k(Con(e.name, (), span=sp))
                return k(self._ctor_wrapper(info, []))
            if e.name in UNARY_PRIMS and e.name not in self.t.globals:
                x = self.fresh("_x")
                return k(Lam(PVar(x), Prim(e.name, (Var(x),), span=sp), span=sp))
            if e.name in self.t.comps:
                return self._bind(self.t.comps[e.name], k, sp)
            return k(Var(e.name, span=sp))
        if isinstance(e, SLit):
            return k(Lit(e.value, e.kind, span=sp))
        if isinstance(e, SUnit):
            return k(Unit(span=sp))
        if isinstance(e, STuple):
            return self._vals(list(e.items), scope, lambda vs: k(self._tuple(vs, sp)))
        if isinstance(e, SList):
            def mk(vs):
                out: Value = Con("[]", (), span=sp)
                for v in reversed(vs):
                    out = Con("::", (v, out), span=sp)
                return k(out)
            return self._vals(list(e.items), scope, mk)
        if isinstance(e, SBin) and e.op == "::":
            return self._vals([e.left, e.right], scope,
                              lambda vs: k(Con("::", tuple(vs), span=sp)))
        if isinstance(e, SLam):
            return k(self.lam(e, scope))
        if isinstance(e, SHandler):
            return k(HandlerVal(self.handler(e, scope), span=sp))
        if isinstance(e, SApp):
            head, args = self._app_spine(e)
            if isinstance(head, SVar) and head.name not in scope and head.name in self.t.ctors:
                info = self.t.ctors[head.name]
                if len(args) > len(info.args):
                    _err("AnnotationArity", sp, f"constructor {head.name} applied to too "
                         f"many arguments", str(len(info.args)), str(len(args)))
                if len(args) == len(info.args):
                    return self._vals(args, scope, lambda vs: k(Con(head.name, tuple(vs), span=sp)))
                return self._vals(args, scope, lambda vs: k(self._ctor_wrapper(info, vs)))
        return self._bind(self.comp(e, scope), k, sp)

    def _bind(self, c: Comp, k: Callable[[Value], Comp], sp) -> Comp:
        if isinstance(c, Return):
            return k(c.value)
        t = self.fresh()
        rest = k(Var(t, span=sp))
        if rest == Return(Var(t)):
            return c  # `do t <- c; return t` is just `c`
        return Do(t, c, rest, span=sp)

    def _vals(self, es: list, scope: frozenset, k: Callable[[list], Comp]) -> Comp:
        out: list = []

        def go(i: int) -> Comp:
            if i == len(es):
                return k(list(out))

            def got(v: Value) -> Comp:
                out.append(v)
                r = go(i + 1)
                out.pop()
                return r
            return self.val(es[i], scope, got)
        return go(0)

    @staticmethod
    def _tuple(vs: list, sp) -> Value:
        out = vs[-1]
        for v in reversed(vs[:-1]):
            out = Pair(v, out, span=sp)
        return out

    def value_of(self, e: SExpr, scope: frozenset) -> Optional[Value]:
        """The value an expression denotes if it is value-like, else None."""
        if not self.value_like(e, scope):
            return None
        c = self.val(e, scope, lambda v: Return(v))
        return c.value if isinstance(c, Return) else None

    def _binder_pat(self, p: Pattern):
        """Split a binder pattern into (name, optional refutable pattern)."""
        p = self.resolve_pattern(p)
        if isinstance(p, PVar):
            return p.name, None
        if isinstance(p, PWild):
            return WILD, None
        return self.fresh("_p"), p

    def lam(self, e: SLam, scope: frozenset) -> Lam:
        pats = [self.resolve_pattern(p) for p in e.params]
        inner = scope
        for p in pats:
            inner = inner | set(pattern_vars(p))
        body = self.comp(e.body, inner)
        for p in reversed(pats[1:]):
            body = Return(Lam(p, body, span=e.span))
        return Lam(pats[0], body, span=e.span)

    # --- computations

    def comp(self, e: SExpr, scope: frozenset) -> Comp:
        sp = getattr(e, "span", None)
        if isinstance(e, SReturn):
            return self.val(e.value, scope, lambda v: Return(v, span=sp))
        if isinstance(e, SVar) and e.name not in scope and e.name in self.t.comps:
            return self.t.comps[e.name]
        if isinstance(e, SOp):
            def mk_op(v: Value) -> Comp:
                if e.body is None:
                    return Op(e.label, v, "y", Return(Var("y")), span=sp)
                return Op(e.label, v, e.var, self.comp(e.body, scope | {e.var}), span=sp)
            return self.val(e.arg, scope, mk_op)
        if isinstance(e, SSc):
            def mk_sc(v: Value) -> Comp:
                c1 = self.comp(e.scoped, scope | {e.var})
                if e.body is None:
                    return Sc(e.label, v, e.var, c1, "z", Return(Var("z")), span=sp)
                return Sc(e.label, v, e.var, c1, e.kvar, self.comp(e.body, scope | {e.kvar}),
                          span=sp)
            return self.val(e.arg, scope, mk_sc)
        if isinstance(e, SWith):
            return self.val(e.handler, scope,
                            lambda h: Handle(h, self.comp(e.body, scope), span=sp))
        if isinstance(e, SDo):
            return self.do(list(e.stmts), scope, sp)
        if isinstance(e, SIf):
            return self.val(e.cond, scope, lambda v: If(
                v, self.comp(e.then, scope), self.comp(e.orelse, scope), span=sp))
        if isinstance(e, SCase):
            return self.val(e.scrutinee, scope, lambda v: self.case(v, list(e.alts), scope, sp))
        if isinstance(e, SLet):
            pat = self.resolve_pattern(e.pat)
            inner = scope | set(pattern_vars(pat))
            v = self.value_of(e.value, scope)
            if v is not None and isinstance(pat, (PVar, PWild)):
                name = pat.name if isinstance(pat, PVar) else WILD
                return Let(name, v, self.comp(e.body, inner), span=sp)
            return self.do([(pat, e.value), (None, e.body)], scope, sp)
        if isinstance(e, SAbsurd):
            return self.val(e.value, scope, lambda v: Absurd(v, span=sp))
        if isinstance(e, SBin):
            if e.op == "<>":
                c1 = self.comp(e.left, scope)
                c2 = self.comp(e.right, scope)
                b = "b"
                if b in c1.fv or b in c2.fv:
                    b = fresh_name("b", c1.fv | c2.fv)
                return Op("choose", Unit(), b, If(Var(b), c1, c2), span=sp)
            if e.op in BINARY_PRIMS:
                return self._vals([e.left, e.right], scope,
                                  lambda vs: Prim(e.op, tuple(vs), span=sp))
        if isinstance(e, SApp):
            head, args = self._app_spine(e)
            if (isinstance(head, SVar) and head.name not in scope and head.name in UNARY_PRIMS
                    and head.name not in self.t.globals):
                return self.val(args[0], scope, lambda v: self._apply(
                    Prim(head.name, (v,), span=sp), args[1:], scope, sp))
            if not self.value_like(e, scope):
                return self.val(head, scope, lambda f: self._apply_value(f, args, scope, sp))
        return self.val(e, scope, lambda v: Return(v, span=sp))

    def _apply_value(self, f: Value, args: list, scope, sp) -> Comp:
        return self.val(args[0], scope, lambda a: self._apply(
            App(f, a, span=sp), args[1:], scope, sp))

    def _apply(self, c: Comp, rest: list, scope, sp) -> Comp:
        if not rest:
            return c
        t = self.fresh()
        return Do(t, c, self._apply_value(Var(t, span=sp), rest, scope, sp), span=sp)

    def do(self, stmts: list, scope: frozenset, sp) -> Comp:
        pat, e = stmts[0]
        if len(stmts) == 1:
            return self.comp(e, scope)
        first = self.comp(e, scope)
        if pat is None:
            return Do(WILD, first, self.do(stmts[1:], scope, sp), span=sp)
        pat = self.resolve_pattern(pat)
        inner = scope | set(pattern_vars(pat))
        rest = self.do(stmts[1:], inner, sp)
        if isinstance(pat, PVar):
            return Do(pat.name, first, rest, span=sp)
        if isinstance(pat, PWild):
            return Do(WILD, first, rest, span=sp)
        t = self.fresh()
        return Do(t, first, Case(Var(t), ((pat, rest),), span=sp), span=sp)

    def case(self, v: Value, alts: list, scope: frozenset, sp) -> Comp:
        core = []
        for i, (pat, guard, body) in enumerate(alts):
            pat = self.resolve_pattern(pat)
            inner = scope | set(pattern_vars(pat))
            c = self.comp(body, inner)
            if guard is not None:
                rest = alts[i + 1:]
                fallback = self.case(v, rest, scope, sp)
                c = self.val(guard, inner, lambda g, c=c, fb=fallback: If(g, c, fb, span=sp))
            core.append((pat, c))
        return Case(v, tuple(core), span=sp)

    # --- handlers

    def handler(self, e: SHandler, scope: frozenset) -> Handler:
        ann = self.resolve_type(e.annotation, e.span) if e.annotation is not None else None
        ret = None
        ops: list = []
        scs: list = []
        fwd = None
        bind = None
        seen: set = set()
        for cl in e.clauses:
            if cl.kind in ("op", "sc"):
                if cl.label in seen:
                    continue  # the first clause for a label wins
                seen.add(cl.label)
            if cl.kind == "return":
                if ret is not None:
                    continue
                x, body = self._clause_body(cl.binders[0], [], cl.body, scope)
                ret = RetClause(x, body, span=cl.span)
            elif cl.kind == "op":
                x, body = self._clause_body(cl.binders[0], [cl.binders[1]], cl.body, scope)
                ops.append(OpClause(cl.label, x, cl.binders[1], body, span=cl.span))
            elif cl.kind == "sc":
                x, body = self._clause_body(cl.binders[0], list(cl.binders[1:]), cl.body, scope)
                scs.append(ScClause(cl.label, x, cl.binders[1], cl.binders[2], body, span=cl.span))
            elif cl.kind == "fwd":
                if fwd is not None:
                    continue
                names = list(cl.binders)
                body = self.comp(cl.body, scope | set(names))
                fwd = FwdClause(names[0], names[1], names[2], body, span=cl.span)
            elif cl.kind == "bind":
                if bind is not None:
                    continue
                x, body = self._clause_body(cl.binders[0], [cl.binders[1]], cl.body, scope)
                bind = BindClause(x, cl.binders[1], body, span=cl.span)
        if ret is None:
            ret = RetClause("x", Return(Var("x")), span=e.span)
        if bind is not None and fwd is not None:
            _err("BothBindAndFwd", e.span, "handler declares both bind and fwd clauses")
        h = Handler(ann, ret, tuple(ops), tuple(scs), fwd, bind, span=e.span)
        try:
            return desugar_bind(h)
        except BothBindAndFwd as ex:  # pragma: no cover - guarded above
            _err("BothBindAndFwd", e.span, str(ex))

    def _clause_body(self, xpat: Pattern, names: list, body: SExpr, scope: frozenset):
        x, refut = self._binder_pat(xpat)
        inner = scope | set(names)
        if refut is None:
            return x, self.comp(body, inner | {x})
        inner = inner | set(pattern_vars(refut))
        return x, Case(Var(x), ((refut, self.comp(body, inner)),))

    # --- declarations

    def elaborate(self, sp: SurfaceProgram) -> Program:
        self._reserve(sp.decls)
        decls = list(sp.decls)
        data_decls, effect_decls, defs, comps = [], [], [], []
        main = None
        # effects and datatypes first, so every later declaration can refer to them
        for d in decls:
            if isinstance(d, DData):
                self.t.datatypes[d.name] = len(d.params)
        for d in decls:
            if isinstance(d, DEffect):
                try:
                    sig = OpSig(d.name, d.flavor, TCon("Unit"), TCon("Unit"))
                    prev = self.t.effects.get(d.name)
                    if prev is not None and prev.flavor != d.flavor:
                        _err("LabelFlavorMismatch", d.span,
                             f"label {d.name} declared both as op and sc", prev.flavor, d.flavor)
                    self.t.effects[d.name] = sig
                except StaticError as ex:
                    self.diagnostics.append(ex.diagnostic)
        for d in decls:
            try:
                if isinstance(d, DEffect):
                    sig = OpSig(d.name, d.flavor, self.resolve_type(d.arg, d.span),
                                self.resolve_type(d.res, d.span))
                    self.t.effects[d.name] = sig
                    effect_decls.append(sig)
                elif isinstance(d, DData):
                    ctors = []
                    for cname, args in d.ctors:
                        rargs = tuple(self.resolve_type(a, d.span) for a in args)
                        ctors.append(CtorDecl(cname, rargs))
                        self.t.ctors[cname] = CtorInfo(cname, d.name, d.params, rargs)
                    dd = DataDecl(d.name, d.params, tuple(ctors))
                    self.t.data_decls[d.name] = dd
                    data_decls.append(dd)
            except StaticError as ex:
                self.diagnostics.append(ex.diagnostic)
        # signatures, then every value-defined name is known up front
        groups: list = []
        for d in decls:
            if isinstance(d, DSig):
                try:
                    self.t.sigs[d.name] = self.resolve_scheme(d.scheme, d.span)
                except StaticError as ex:
                    self.diagnostics.append(ex.diagnostic)
            elif isinstance(d, DDef):
                if groups and groups[-1][0] == d.name and d.params:
                    groups[-1][1].append(d)
                else:
                    groups.append((d.name, [d]))
        for name, eqs in groups:
            if name != "main" and eqs[0].params:
                self.t.globals[name] = Var(name)
        for name, eqs in groups:
            try:
                if name == "main" and not eqs[0].params:
                    main = self.comp(eqs[0].body, frozenset())
                    continue
                d0 = eqs[0]
                if not d0.params:
                    body = d0.body
                    v = None if isinstance(body, SReturn) else self.value_of(body, frozenset())
                    if v is None:
                        c = self.comp(body, frozenset())
                        self.t.comps[name] = c
                        comps.append((name, c))
                        continue
                    self.t.globals[name] = v
                    defs.append(TopDef(name, self.t.sigs.get(name), v, span=d0.span))
                else:
                    v = self.equations(eqs)
                    self.t.globals[name] = v
                    defs.append(TopDef(name, self.t.sigs.get(name), v, span=d0.span))
            except StaticError as ex:
                self.diagnostics.append(ex.diagnostic)
        return Program(tuple(data_decls), tuple(effect_decls), tuple(defs), tuple(comps), main)

    def equations(self, eqs: list) -> Value:
        n = len(eqs[0].params)
        sp = eqs[0].span
        for d in eqs:
            if len(d.params) != n:
                _err("AnnotationArity", d.span, f"equations for {d.name} have different "
                     f"numbers of parameters", str(n), str(len(d.params)))
        if len(eqs) == 1 and all(isinstance(self.resolve_pattern(p), (PVar, PWild))
                                 for p in eqs[0].params):
            return self.lam(SLam(eqs[0].params, eqs[0].body, span=sp), frozenset())
        names = [self.fresh("_a") for _ in range(n)]
        alts = []
        for d in eqs:
            pats = [self.resolve_pattern(p) for p in d.params]
            scope = frozenset(n for p in pats for n in pattern_vars(p))
            pat = pats[-1]
            for p in reversed(pats[:-1]):
                pat = PPair(p, pat)
            alts.append((pat, self.comp(d.body, scope)))
        scrut = Var(names[-1])
        for nm in reversed(names[:-1]):
            scrut = Pair(Var(nm), scrut)
        body: Comp = Case(scrut, tuple(alts), span=sp)
        for nm in reversed(names[1:]):
            body = Return(Lam(PVar(nm), body, span=sp))
        return Lam(PVar(names[0]), body, span=sp)

    def expression(self, e: SExpr) -> Comp:
        self._reserve(e)
        return self.comp(e, frozenset())


def env_of(tables: Tables) -> dict:
    """Evaluation environment: every top-level value definition by name."""
    return {k: v for k, v in tables.globals.items() if not (isinstance(v, Var) and v.name == k)}
