"""Core term language: values, computations, handlers, patterns and programs.

Binders are plain names.  ``"_"`` is the wildcard binder and never binds.
Substitution is capture-avoiding and only renames a binder when one of the
substituted values mentions it freely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from .types import Scheme, ValueType, type_equiv


class BothBindAndFwd(Exception):
    """A handler declares both a `bind` and a `fwd` clause."""


WILD = "_"


@dataclass(frozen=True)
class Node:
    span: object = field(default=None, compare=False, repr=False, kw_only=True)

    @cached_property
    def fv(self) -> frozenset:
        return frozenset(_fv(self))


# --- patterns ---------------------------------------------------------------


class Pattern(Node):
    pass


@dataclass(frozen=True)
class PVar(Pattern):
    name: str


@dataclass(frozen=True)
class PWild(Pattern):
    pass


@dataclass(frozen=True)
class PUnit(Pattern):
    pass


@dataclass(frozen=True)
class PPair(Pattern):
    fst: Pattern
    snd: Pattern


@dataclass(frozen=True)
class PCon(Pattern):
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class PLit(Pattern):
    value: object
    kind: str


def pattern_vars(p: Pattern) -> list:
    if isinstance(p, PVar):
        return [p.name]
    if isinstance(p, PPair):
        return pattern_vars(p.fst) + pattern_vars(p.snd)
    if isinstance(p, PCon):
        return [n for a in p.args for n in pattern_vars(a)]
    return []


def rename_pattern(p: Pattern, ren: dict) -> Pattern:
    if isinstance(p, PVar):
        return PVar(ren.get(p.name, p.name), span=p.span)
    if isinstance(p, PPair):
        return PPair(rename_pattern(p.fst, ren), rename_pattern(p.snd, ren), span=p.span)
    if isinstance(p, PCon):
        return PCon(p.name, tuple(rename_pattern(a, ren) for a in p.args), span=p.span)
    return p


# --- values -----------------------------------------------------------------


class Value(Node):
    pass


@dataclass(frozen=True)
class Unit(Value):
    pass


@dataclass(frozen=True)
class Pair(Value):
    fst: Value
    snd: Value


@dataclass(frozen=True)
class Var(Value):
    name: str


@dataclass(frozen=True)
class Lam(Value):
    pat: Pattern
    body: "Comp"


@dataclass(frozen=True)
class Lit(Value):
    value: object
    kind: str  # "Int" | "Bool" | "Char" | "String"


@dataclass(frozen=True)
class Con(Value):
    """Constructor application: lists use `[]`/`::`, sums `left`/`right`."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class HandlerVal(Value):
    handler: "Handler"


# --- computations -----------------------------------------------------------


class Comp(Node):
    pass


@dataclass(frozen=True)
class Return(Comp):
    value: Value


@dataclass(frozen=True)
class Op(Comp):
    label: str
    arg: Value
    var: str
    body: Comp


@dataclass(frozen=True)
class Sc(Comp):
    label: str
    arg: Value
    var: str
    scoped: Comp
    kvar: str
    body: Comp


@dataclass(frozen=True)
class Handle(Comp):
    handler: Value
    body: Comp


@dataclass(frozen=True)
class Do(Comp):
    var: str
    first: Comp
    rest: Comp


@dataclass(frozen=True)
class App(Comp):
    fn: Value
    arg: Value


@dataclass(frozen=True)
class Let(Comp):
    var: str
    value: Value
    body: Comp


@dataclass(frozen=True)
class Case(Comp):
    scrutinee: Value
    alts: tuple  # of (Pattern, Comp)


@dataclass(frozen=True)
class If(Comp):
    cond: Value
    then: Comp
    orelse: Comp


@dataclass(frozen=True)
class Absurd(Comp):
    value: Value


@dataclass(frozen=True)
class Prim(Comp):
    op: str
    args: tuple


# --- handlers ---------------------------------------------------------------


@dataclass(frozen=True)
class RetClause(Node):
    var: str
    body: Comp


@dataclass(frozen=True)
class OpClause(Node):
    label: str
    var: str
    kvar: str
    body: Comp


@dataclass(frozen=True)
class ScClause(Node):
    label: str
    var: str
    pvar: str
    kvar: str
    body: Comp


@dataclass(frozen=True)
class FwdClause(Node):
    fvar: str
    pvar: str
    kvar: str
    body: Comp


@dataclass(frozen=True)
class BindClause(Node):
    var: str
    kvar: str
    body: Comp


@dataclass(frozen=True)
class Handler(Node):
    annotation: Optional[ValueType]
    ret: RetClause
    ops: tuple = ()
    scs: tuple = ()
    fwd: Optional[FwdClause] = None
    # the clause a desugared `fwd` came from; kept for the direct bind rule
    bind: Optional[BindClause] = field(default=None, compare=False)

    def op_clause(self, label: str) -> Optional[OpClause]:
        for c in self.ops:
            if c.label == label:
                return c
        return None

    def sc_clause(self, label: str) -> Optional[ScClause]:
        for c in self.scs:
            if c.label == label:
                return c
        return None

    def labels(self) -> list:
        seen: list = []
        for c in self.ops + self.scs:
            if c.label not in seen:
                seen.append(c.label)
        return seen


# --- programs ---------------------------------------------------------------


@dataclass(frozen=True)
class CtorDecl:
    name: str
    args: tuple  # of ValueType over the datatype parameters


@dataclass(frozen=True)
class DataDecl:
    name: str
    params: tuple
    ctors: tuple


@dataclass(frozen=True)
class TopDef:
    name: str
    annotation: Optional[Scheme]
    value: Value
    span: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Program:
    data_decls: tuple = ()
    effect_decls: tuple = ()  # of OpSig
    defs: tuple = ()  # of TopDef
    comps: tuple = ()  # named computations, as (name, Comp); inlined at use sites
    main: Optional[Comp] = None


# --- free variables ---------------------------------------------------------


def _fv(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, (Unit, Lit)):
        return set()
    if isinstance(t, Pair):
        return t.fst.fv | t.snd.fv
    if isinstance(t, Con):
        out: set = set()
        for a in t.args:
            out |= a.fv
        return out
    if isinstance(t, Lam):
        return t.body.fv - set(pattern_vars(t.pat))
    if isinstance(t, HandlerVal):
        return _handler_fv(t.handler)
    if isinstance(t, Return):
        return set(t.value.fv)
    if isinstance(t, Op):
        return t.arg.fv | (t.body.fv - {t.var})
    if isinstance(t, Sc):
        return t.arg.fv | (t.scoped.fv - {t.var}) | (t.body.fv - {t.kvar})
    if isinstance(t, Handle):
        return t.handler.fv | t.body.fv
    if isinstance(t, Do):
        return t.first.fv | (t.rest.fv - {t.var})
    if isinstance(t, App):
        return t.fn.fv | t.arg.fv
    if isinstance(t, Let):
        return t.value.fv | (t.body.fv - {t.var})
    if isinstance(t, Case):
        out = set(t.scrutinee.fv)
        for p, c in t.alts:
            out |= c.fv - set(pattern_vars(p))
        return out
    if isinstance(t, If):
        return t.cond.fv | t.then.fv | t.orelse.fv
    if isinstance(t, Absurd):
        return set(t.value.fv)
    if isinstance(t, Prim):
        out = set()
        for a in t.args:
            out |= a.fv
        return out
    if isinstance(t, Pattern):
        return set()
    if isinstance(t, Handler):
        return _handler_fv(t)
    raise TypeError(f"not a term: {t!r}")


def _handler_fv(h: Handler) -> set:
    out = h.ret.body.fv - {h.ret.var}
    for c in h.ops:
        out |= c.body.fv - {c.var, c.kvar}
    for c in h.scs:
        out |= c.body.fv - {c.var, c.pvar, c.kvar}
    if h.fwd is not None:
        out |= h.fwd.body.fv - {h.fwd.fvar, h.fwd.pvar, h.fwd.kvar}
    return out


def free_vars(t) -> set:
    """Free term variables of a value, computation or handler."""
    if isinstance(t, Handler):
        return _handler_fv(t)
    return set(t.fv)


# --- substitution -----------------------------------------------------------


def fresh_name(base: str, avoid) -> str:
    base = base.rstrip("'0123456789") or "x"
    if base == "_":
        base = "x"
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def _binder(name: str, body, sub: dict):
    """Prepare to go under binder `name`: returns (name', body', sub')."""
    if name in sub:
        sub = {k: v for k, v in sub.items() if k != name}
    if not sub or name == WILD:
        return name, body, sub
    live = {k: v for k, v in sub.items() if k in body.fv}
    if not live:
        return name, body, {}
    danger: set = set()
    for v in live.values():
        danger |= v.fv
    if name in danger:
        new = fresh_name(name, danger | body.fv | set(live))
        body = subst(body, {name: Var(new)})
        return new, body, live
    return name, body, live


def _binders(names: list, body, sub: dict):
    """Multi-binder variant used for patterns and handler clauses."""
    sub = {k: v for k, v in sub.items() if k not in names}
    if not sub:
        return {}, body, sub
    live = {k: v for k, v in sub.items() if k in body.fv}
    if not live:
        return {}, body, {}
    danger: set = set()
    for v in live.values():
        danger |= v.fv
    ren = {}
    avoid = danger | body.fv | set(live) | set(names)
    for n in names:
        if n != WILD and n in danger:
            new = fresh_name(n, avoid)
            avoid.add(new)
            ren[n] = new
    if ren:
        body = subst(body, {k: Var(v) for k, v in ren.items()})
    return ren, body, live


def subst(t, sub: dict):
    """Simultaneous capture-avoiding substitution of values for variables."""
    if not sub or not (t.fv & sub.keys()):
        return t
    sp = t.span
    if isinstance(t, Var):
        return sub.get(t.name, t)
    if isinstance(t, Pair):
        return Pair(subst(t.fst, sub), subst(t.snd, sub), span=sp)
    if isinstance(t, Con):
        return Con(t.name, tuple(subst(a, sub) for a in t.args), span=sp)
    if isinstance(t, Lam):
        names = pattern_vars(t.pat)
        ren, body, s2 = _binders(names, t.body, sub)
        return Lam(rename_pattern(t.pat, ren), subst(body, s2), span=sp)
    if isinstance(t, HandlerVal):
        return HandlerVal(subst_handler(t.handler, sub), span=sp)
    if isinstance(t, Return):
        return Return(subst(t.value, sub), span=sp)
    if isinstance(t, Op):
        y, body, s2 = _binder(t.var, t.body, sub)
        return Op(t.label, subst(t.arg, sub), y, subst(body, s2), span=sp)
    if isinstance(t, Sc):
        y, c1, s1 = _binder(t.var, t.scoped, sub)
        z, c2, s2 = _binder(t.kvar, t.body, sub)
        return Sc(t.label, subst(t.arg, sub), y, subst(c1, s1), z, subst(c2, s2), span=sp)
    if isinstance(t, Handle):
        return Handle(subst(t.handler, sub), subst(t.body, sub), span=sp)
    if isinstance(t, Do):
        x, rest, s2 = _binder(t.var, t.rest, sub)
        return Do(x, subst(t.first, sub), subst(rest, s2), span=sp)
    if isinstance(t, App):
        return App(subst(t.fn, sub), subst(t.arg, sub), span=sp)
    if isinstance(t, Let):
        x, body, s2 = _binder(t.var, t.body, sub)
        return Let(x, subst(t.value, sub), subst(body, s2), span=sp)
    if isinstance(t, Case):
        alts = []
        for p, c in t.alts:
            ren, body, s2 = _binders(pattern_vars(p), c, sub)
            alts.append((rename_pattern(p, ren), subst(body, s2)))
        return Case(subst(t.scrutinee, sub), tuple(alts), span=sp)
    if isinstance(t, If):
        return If(subst(t.cond, sub), subst(t.then, sub), subst(t.orelse, sub), span=sp)
    if isinstance(t, Absurd):
        return Absurd(subst(t.value, sub), span=sp)
    if isinstance(t, Prim):
        return Prim(t.op, tuple(subst(a, sub) for a in t.args), span=sp)
    raise TypeError(f"cannot substitute into {t!r}")


def _clause(names: list, body, sub: dict):
    ren, body, s2 = _binders(names, body, sub)
    return [ren.get(n, n) for n in names], subst(body, s2)


def subst_handler(h: Handler, sub: dict) -> Handler:
    (x,), rbody = _clause([h.ret.var], h.ret.body, sub)
    ret = RetClause(x, rbody, span=h.ret.span)
    ops = []
    for c in h.ops:
        (x, k), body = _clause([c.var, c.kvar], c.body, sub)
        ops.append(OpClause(c.label, x, k, body, span=c.span))
    scs = []
    for c in h.scs:
        (x, p, k), body = _clause([c.var, c.pvar, c.kvar], c.body, sub)
        scs.append(ScClause(c.label, x, p, k, body, span=c.span))
    fwd = None
    if h.fwd is not None:
        (f, p, k), body = _clause([h.fwd.fvar, h.fwd.pvar, h.fwd.kvar], h.fwd.body, sub)
        fwd = FwdClause(f, p, k, body, span=h.fwd.span)
    bind = None
    if h.bind is not None:
        (x, k), body = _clause([h.bind.var, h.bind.kvar], h.bind.body, sub)
        bind = BindClause(x, k, body, span=h.bind.span)
    return Handler(h.annotation, ret, tuple(ops), tuple(scs), fwd, bind, span=h.span)


def substitute(c, x: str, v: Value):
    """`c[v/x]`."""
    return subst(c, {x: v})


# --- alpha equivalence ------------------------------------------------------


class _Env:
    __slots__ = ("a", "b", "depth")

    def __init__(self, a=None, b=None, depth=0):
        self.a = a or {}
        self.b = b or {}
        self.depth = depth

    def bind(self, xs: list, ys: list) -> "_Env":
        a, b, d = dict(self.a), dict(self.b), self.depth
        for x, y in zip(xs, ys):
            if x != WILD:
                a[x] = d
            if y != WILD:
                b[y] = d
            d += 1
        return _Env(a, b, d)


def _pat_eq(p, q, xs: list, ys: list) -> bool:
    if type(p) is not type(q):
        return False
    if isinstance(p, PVar):
        xs.append(p.name)
        ys.append(q.name)
        return True
    if isinstance(p, PPair):
        return _pat_eq(p.fst, q.fst, xs, ys) and _pat_eq(p.snd, q.snd, xs, ys)
    if isinstance(p, PCon):
        return p.name == q.name and len(p.args) == len(q.args) and all(
            _pat_eq(a, b, xs, ys) for a, b in zip(p.args, q.args))
    if isinstance(p, PLit):
        return p.kind == q.kind and p.value == q.value
    return True


def _wild_eq(x: str, y: str) -> bool:
    return (x == WILD) == (y == WILD)


def _aeq(s, t, env: _Env) -> bool:
    if isinstance(s, Var) and isinstance(t, Var):
        ia, ib = env.a.get(s.name), env.b.get(t.name)
        if ia is None and ib is None:
            return s.name == t.name
        return ia == ib
    if type(s) is not type(t):
        return False
    if isinstance(s, Unit):
        return True
    if isinstance(s, Lit):
        return s.kind == t.kind and s.value == t.value
    if isinstance(s, Pair):
        return _aeq(s.fst, t.fst, env) and _aeq(s.snd, t.snd, env)
    if isinstance(s, Con):
        return s.name == t.name and len(s.args) == len(t.args) and all(
            _aeq(a, b, env) for a, b in zip(s.args, t.args))
    if isinstance(s, Lam):
        xs: list = []
        ys: list = []
        return _pat_eq(s.pat, t.pat, xs, ys) and _aeq(s.body, t.body, env.bind(xs, ys))
    if isinstance(s, HandlerVal):
        return _handler_aeq(s.handler, t.handler, env)
    if isinstance(s, Return):
        return _aeq(s.value, t.value, env)
    if isinstance(s, Op):
        return (s.label == t.label and _aeq(s.arg, t.arg, env) and _wild_eq(s.var, t.var)
                and _aeq(s.body, t.body, env.bind([s.var], [t.var])))
    if isinstance(s, Sc):
        return (s.label == t.label and _aeq(s.arg, t.arg, env)
                and _wild_eq(s.var, t.var) and _wild_eq(s.kvar, t.kvar)
                and _aeq(s.scoped, t.scoped, env.bind([s.var], [t.var]))
                and _aeq(s.body, t.body, env.bind([s.kvar], [t.kvar])))
    if isinstance(s, Handle):
        return _aeq(s.handler, t.handler, env) and _aeq(s.body, t.body, env)
    if isinstance(s, Do):
        return (_aeq(s.first, t.first, env) and _wild_eq(s.var, t.var)
                and _aeq(s.rest, t.rest, env.bind([s.var], [t.var])))
    if isinstance(s, App):
        return _aeq(s.fn, t.fn, env) and _aeq(s.arg, t.arg, env)
    if isinstance(s, Let):
        return (_aeq(s.value, t.value, env) and _wild_eq(s.var, t.var)
                and _aeq(s.body, t.body, env.bind([s.var], [t.var])))
    if isinstance(s, Case):
        if len(s.alts) != len(t.alts) or not _aeq(s.scrutinee, t.scrutinee, env):
            return False
        for (p, c), (q, d) in zip(s.alts, t.alts):
            xs, ys = [], []
            if not (_pat_eq(p, q, xs, ys) and _aeq(c, d, env.bind(xs, ys))):
                return False
        return True
    if isinstance(s, If):
        return (_aeq(s.cond, t.cond, env) and _aeq(s.then, t.then, env)
                and _aeq(s.orelse, t.orelse, env))
    if isinstance(s, Absurd):
        return _aeq(s.value, t.value, env)
    if isinstance(s, Prim):
        return s.op == t.op and len(s.args) == len(t.args) and all(
            _aeq(a, b, env) for a, b in zip(s.args, t.args))
    return False


def _clause_aeq(xs, ys, b1, b2, env) -> bool:
    return all(_wild_eq(x, y) for x, y in zip(xs, ys)) and _aeq(b1, b2, env.bind(xs, ys))


def _handler_aeq(h: Handler, g: Handler, env: _Env) -> bool:
    if (h.annotation is None) != (g.annotation is None):
        return False
    if h.annotation is not None and not type_equiv(h.annotation, g.annotation):
        return False
    if not _clause_aeq([h.ret.var], [g.ret.var], h.ret.body, g.ret.body, env):
        return False
    if len(h.ops) != len(g.ops) or len(h.scs) != len(g.scs):
        return False
    for a, b in zip(h.ops, g.ops):
        if a.label != b.label or not _clause_aeq([a.var, a.kvar], [b.var, b.kvar], a.body, b.body, env):
            return False
    for a, b in zip(h.scs, g.scs):
        if a.label != b.label or not _clause_aeq(
                [a.var, a.pvar, a.kvar], [b.var, b.pvar, b.kvar], a.body, b.body, env):
            return False
    if (h.fwd is None) != (g.fwd is None):
        return False
    if h.fwd is not None:
        return _clause_aeq([h.fwd.fvar, h.fwd.pvar, h.fwd.kvar],
                           [g.fwd.fvar, g.fwd.pvar, g.fwd.kvar], h.fwd.body, g.fwd.body, env)
    return True


def alpha_eq(s, t) -> bool:
    if isinstance(s, Handler) and isinstance(t, Handler):
        return _handler_aeq(s, t, _Env())
    return _aeq(s, t, _Env())


# --- desugaring -------------------------------------------------------------


def desugar_bind(h: Handler) -> Handler:
    """Replace `bind x k -> c` with `fwd f p k -> f (p, \\x. c)`.

    The originating bind clause is kept on the handler so the evaluator can
    also run the direct bind rule for coherence checks.  Idempotent on
    handlers whose fwd clause is already the image of their bind clause.
    """
    if h.bind is None:
        return h
    b = h.bind
    avoid = set(b.body.fv) | {b.var, b.kvar}
    f = "f" if "f" not in avoid else fresh_name("f", avoid)
    avoid.add(f)
    p = "p" if "p" not in avoid else fresh_name("p", avoid)
    body = App(Var(f), Pair(Var(p), Lam(PVar(b.var) if b.var != WILD else PWild(), b.body)),
               span=b.span)
    fwd = FwdClause(f, p, b.kvar, body, span=b.span)
    if h.fwd is not None:
        if _clause_aeq([h.fwd.fvar, h.fwd.pvar, h.fwd.kvar], [f, p, b.kvar],
                       h.fwd.body, body, _Env()):
            return h
        raise BothBindAndFwd("handler declares both bind and fwd clauses")
    return Handler(h.annotation, h.ret, h.ops, h.scs, fwd, b, span=h.span)


def is_value(t) -> bool:
    return isinstance(t, Value)
