"""Small-step reduction with deep handlers, delta rules and a fuel-bounded driver.

`step` finds the unique redex by descending through `do` heads and handled
bodies.  The reported rule is the innermost (principal) one; the congruence
rules passed on the way down are kept separately in `Stepped.context`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .syntax import (
    WILD, Absurd, App, Case, Comp, Con, Do, Handle, Handler, HandlerVal, If, Lam,
    Let, Lit, Op, Pair, PCon, PLit, PPair, PUnit, PVar, PWild, Pattern, Prim, Return,
    Sc, Unit, Value, Var, fresh_name, subst,
)

DEFAULT_FUEL = 1_000_000


# --- results ----------------------------------------------------------------


class StepResult:
    __slots__ = ()


@dataclass(frozen=True)
class Stepped(StepResult):
    term: Comp
    rule: str
    context: tuple = ()


@dataclass(frozen=True)
class NormalReturn(StepResult):
    value: Value


@dataclass(frozen=True)
class NormalOp(StepResult):
    label: str
    arg: Value
    var: str
    body: Comp


@dataclass(frozen=True)
class NormalSc(StepResult):
    label: str
    arg: Value
    var: str
    scoped: Comp
    kvar: str
    body: Comp


@dataclass(frozen=True)
class Stuck(StepResult):
    reason: str
    prim_error: bool = False


@dataclass(frozen=True)
class FuelExhausted(StepResult):
    term: Comp
    fuel: int


NORMAL = (NormalReturn, NormalOp, NormalSc)


def as_term(r: StepResult) -> Comp:
    """The computation a normal-form result stands for."""
    if isinstance(r, NormalReturn):
        return Return(r.value)
    if isinstance(r, NormalOp):
        return Op(r.label, r.arg, r.var, r.body)
    if isinstance(r, NormalSc):
        return Sc(r.label, r.arg, r.var, r.scoped, r.kvar, r.body)
    if isinstance(r, FuelExhausted):
        return r.term
    raise ValueError(f"{type(r).__name__} has no term")


class PrimError(Exception):
    pass


class _StuckSignal(Exception):
    def __init__(self, reason: str, prim_error: bool = False):
        super().__init__(reason)
        self.reason = reason
        self.prim_error = prim_error


# --- environment ------------------------------------------------------------


def _resolve(v: Value, env: Mapping) -> Value:
    seen = 0
    while isinstance(v, Var):
        if v.name not in env:
            raise _StuckSignal(f"UnknownName: {v.name}")
        v = env[v.name]
        seen += 1
        if seen > 1000:
            raise _StuckSignal(f"cyclic definition of {v!r}")
    return v


def resolve_handler(v: Value, env: Mapping) -> Handler:
    v = _resolve(v, env)
    if not isinstance(v, HandlerVal):
        raise _StuckSignal("handling with a non-handler value")
    return v.handler


# --- strings and lists ------------------------------------------------------


def _list_items(v: Value, env: Mapping) -> Optional[list]:
    """Python list of the elements of a list value, or None if not a list."""
    out = []
    while True:
        v = _resolve(v, env)
        if isinstance(v, Lit) and v.kind == "String":
            out.extend(Lit(ch, "Char") for ch in v.value)
            return out
        if isinstance(v, Con) and v.name == "[]":
            return out
        if isinstance(v, Con) and v.name == "::":
            out.append(v.args[0])
            v = v.args[1]
            continue
        return None


def _is_strlit(v: Value) -> bool:
    return isinstance(v, Lit) and v.kind == "String"


def _build_list(items: list, as_string: bool) -> Value:
    if as_string and all(isinstance(i, Lit) and i.kind == "Char" for i in items):
        return Lit("".join(i.value for i in items), "String")
    out: Value = Con("[]")
    for it in reversed(items):
        out = Con("::", (it, out))
    return out


def _values_equal(a: Value, b: Value, env: Mapping) -> bool:
    """Structural equality; only comparing two functions or handlers fails."""
    a, b = _resolve(a, env), _resolve(b, env)
    if _is_strlit(a) or _is_strlit(b) or (isinstance(a, Con) and a.name in ("[]", "::")):
        xs, ys = _list_items(a, env), _list_items(b, env)
        if xs is None or ys is None:
            raise PrimError("equality on functions or handlers")
        return len(xs) == len(ys) and all(_values_equal(x, y, env) for x, y in zip(xs, ys))
    if isinstance(a, Lit) and isinstance(b, Lit):
        return (a.kind, a.value) == (b.kind, b.value)
    if isinstance(a, Unit) and isinstance(b, Unit):
        return True
    if isinstance(a, Pair) and isinstance(b, Pair):
        return _values_equal(a.fst, b.fst, env) and _values_equal(a.snd, b.snd, env)
    if isinstance(a, Con) and isinstance(b, Con):
        return (a.name == b.name and len(a.args) == len(b.args)
                and all(_values_equal(x, y, env) for x, y in zip(a.args, b.args)))
    raise PrimError("equality on functions or handlers")


def _int(v: Value) -> int:
    if isinstance(v, Lit) and v.kind == "Int":
        return v.value
    raise PrimError(f"expected an integer, got {v!r}")


def delta(prim: str, args, env: Mapping = {}) -> Comp:
    """Primitive reduction; returns `return v` or raises PrimError."""
    args = [_resolve(a, env) for a in args]
    if prim in ("+", "-", "*"):
        a, b = _int(args[0]), _int(args[1])
        r = a + b if prim == "+" else a - b if prim == "-" else a * b
        return Return(Lit(r, "Int"))
    if prim in (">", "<", ">=", "<="):
        a, b = _int(args[0]), _int(args[1])
        r = {">": a > b, "<": a < b, ">=": a >= b, "<=": a <= b}[prim]
        return Return(Lit(r, "Bool"))
    if prim == "=":
        return Return(Lit(_values_equal(args[0], args[1], env), "Bool"))
    if prim == "++":
        xs, ys = _list_items(args[0], env), _list_items(args[1], env)
        if xs is None or ys is None:
            raise PrimError("++ on non-lists")
        stringy = _is_strlit(args[0]) or _is_strlit(args[1])
        return Return(_build_list(xs + ys, stringy))
    if prim == "head":
        xs = _list_items(args[0], env)
        if xs is None:
            raise PrimError("head of a non-list")
        if not xs:
            raise PrimError("head of empty list")
        return Return(xs[0])
    if prim == "read":
        xs = _list_items(args[0], env)
        if xs is None or not xs:
            raise PrimError("read of a non-string")
        s = "".join(_resolve(c, env).value for c in xs)
        try:
            return Return(Lit(int(s), "Int"))
        except ValueError:
            raise PrimError(f"read: not a number: {s!r}") from None
    if prim == "not":
        v = args[0]
        if isinstance(v, Lit) and v.kind == "Bool":
            return Return(Lit(not v.value, "Bool"))
        raise PrimError("not of a non-boolean")
    raise PrimError(f"unknown primitive {prim}")


# --- pattern matching -------------------------------------------------------


def match(p: Pattern, v: Value, env: Mapping, out: dict) -> bool:
    if isinstance(p, PVar):
        out[p.name] = v
        return True
    if isinstance(p, PWild):
        return True
    v = _resolve(v, env)
    if isinstance(p, PUnit):
        return isinstance(v, Unit)
    if isinstance(p, PPair):
        return isinstance(v, Pair) and match(p.fst, v.fst, env, out) and match(p.snd, v.snd, env, out)
    if isinstance(p, PLit):
        if p.kind == "String":
            items = _list_items(v, env)
            return items is not None and "".join(
                _resolve(c, env).value for c in items) == p.value
        return isinstance(v, Lit) and v.kind == p.kind and v.value == p.value
    if isinstance(p, PCon):
        if _is_strlit(v):
            if p.name == "[]":
                return v.value == ""
            if p.name == "::" and v.value:
                return (match(p.args[0], Lit(v.value[0], "Char"), env, out)
                        and match(p.args[1], Lit(v.value[1:], "String"), env, out))
            return False
        if isinstance(v, Lit) and v.kind == "Bool" and p.name in ("true", "false"):
            return v.value == (p.name == "true")
        if not isinstance(v, Con) or v.name != p.name or len(v.args) != len(p.args):
            return False
        return all(match(q, a, env, out) for q, a in zip(p.args, v.args))
    raise TypeError(f"not a pattern: {p!r}")


# --- the step function ------------------------------------------------------


def _avoiding(name: str, avoid) -> str:
    if name == WILD or name not in avoid:
        return name
    return fresh_name(name, set(avoid))


def _step(c: Comp, env: Mapping, use_bind: bool) -> StepResult:
    if isinstance(c, Return):
        return NormalReturn(c.value)
    if isinstance(c, Op):
        return NormalOp(c.label, c.arg, c.var, c.body)
    if isinstance(c, Sc):
        return NormalSc(c.label, c.arg, c.var, c.scoped, c.kvar, c.body)
    if isinstance(c, App):
        fn = _resolve(c.fn, env)
        if not isinstance(fn, Lam):
            raise _StuckSignal("application of a non-function")
        binds: dict = {}
        if not match(fn.pat, c.arg, env, binds):
            raise _StuckSignal("lambda pattern does not match its argument")
        return Stepped(subst(fn.body, binds), "E-AppAbs")
    if isinstance(c, Let):
        return Stepped(subst(c.body, {c.var: c.value}) if c.var != WILD else c.body, "E-Let")
    if isinstance(c, Do):
        return _step_do(c, env, use_bind)
    if isinstance(c, Handle):
        return _step_handle(c, env, use_bind)
    if isinstance(c, If):
        v = _resolve(c.cond, env)
        if not (isinstance(v, Lit) and v.kind == "Bool"):
            raise _StuckSignal("if on a non-boolean")
        return Stepped(c.then, "E-IfTrue") if v.value else Stepped(c.orelse, "E-IfFalse")
    if isinstance(c, Case):
        for p, body in c.alts:
            binds = {}
            if match(p, c.scrutinee, env, binds):
                return Stepped(subst(body, binds), "E-Case")
        raise _StuckSignal("no case alternative matches")
    if isinstance(c, Absurd):
        raise _StuckSignal("absurd reached")
    if isinstance(c, Prim):
        try:
            return Stepped(delta(c.op, c.args, env), "E-Prim")
        except PrimError as e:
            raise _StuckSignal(str(e), prim_error=True) from None
    raise _StuckSignal(f"not a computation: {type(c).__name__}")


def _step_do(c: Do, env: Mapping, use_bind: bool) -> StepResult:
    r = _step(c.first, env, use_bind)
    if isinstance(r, Stepped):
        return Stepped(Do(c.var, r.term, c.rest, span=c.span), r.rule, ("E-Do",) + r.context)
    if isinstance(r, NormalReturn):
        if c.var == WILD:
            return Stepped(c.rest, "E-DoRet")
        return Stepped(subst(c.rest, {c.var: r.value}), "E-DoRet")
    outer = c.rest.fv - {c.var}
    if isinstance(r, NormalOp):
        y, body = r.var, r.body
        if y in outer:
            y = _avoiding(y, outer | body.fv)
            body = subst(body, {r.var: Var(y)})
        return Stepped(Op(r.label, r.arg, y, Do(c.var, body, c.rest)), "E-DoOp")
    if isinstance(r, NormalSc):
        z, body = r.kvar, r.body
        if z in outer:
            z = _avoiding(z, outer | body.fv)
            body = subst(body, {r.kvar: Var(z)})
        return Stepped(Sc(r.label, r.arg, r.var, r.scoped, z, Do(c.var, body, c.rest)), "E-DoSc")
    raise AssertionError(r)


def _rebind(var: str, body: Comp, avoid) -> tuple:
    """Rename binder `var` of `body` away from `avoid` if needed."""
    if var == WILD or var not in avoid:
        return var, body
    new = fresh_name(var, set(avoid) | body.fv)
    return new, subst(body, {var: Var(new)})


def _lam(var: str, body: Comp) -> Lam:
    return Lam(PWild() if var == WILD else PVar(var), body)


def _step_handle(c: Handle, env: Mapping, use_bind: bool) -> StepResult:
    r = _step(c.body, env, use_bind)
    hv = c.handler
    if isinstance(r, Stepped):
        return Stepped(Handle(hv, r.term, span=c.span), r.rule, ("E-Hand",) + r.context)
    h = resolve_handler(hv, env)
    if isinstance(r, NormalReturn):
        cl = h.ret
        return Stepped(subst(cl.body, {cl.var: r.value}) if cl.var != WILD else cl.body,
                       "E-HandRet")
    hfv = hv.fv
    if isinstance(r, NormalOp):
        y, c1 = _rebind(r.var, r.body, hfv)
        cl = h.op_clause(r.label)
        if cl is not None:
            sub = {cl.var: r.arg, cl.kvar: _lam(y, Handle(hv, c1))}
            return Stepped(subst(cl.body, {k: v for k, v in sub.items() if k != WILD}), "E-HandOp")
        return Stepped(Op(r.label, r.arg, y, Handle(hv, c1)), "E-FwdOp")
    if isinstance(r, NormalSc):
        y, c1 = _rebind(r.var, r.scoped, hfv)
        z, c2 = _rebind(r.kvar, r.body, hfv)
        cl = h.sc_clause(r.label)
        if cl is not None:
            sub = {cl.var: r.arg, cl.pvar: _lam(y, Handle(hv, c1)), cl.kvar: _lam(z, Handle(hv, c2))}
            return Stepped(subst(cl.body, {k: v for k, v in sub.items() if k != WILD}), "E-HandSc")
        if use_bind and h.bind is not None:
            b = h.bind
            resume = _lam(z, Handle(hv, c2))
            avoid = (b.body.fv - {b.var, b.kvar}) | resume.fv
            zn = z if z != WILD else "z"
            if zn in avoid:
                zn = fresh_name(zn, avoid)
            sub = {}
            if b.var != WILD:
                sub[b.var] = Var(zn)
            if b.kvar != WILD:
                sub[b.kvar] = resume
            return Stepped(Sc(r.label, r.arg, y, Handle(hv, c1), zn, subst(b.body, sub)), "E-Bind")
        if h.fwd is None:
            raise _StuckSignal(f"handler cannot forward scoped operation {r.label}")
        fw = h.fwd
        avoid = r.arg.fv | {y, z}
        pp = _avoiding("p'", avoid)
        kk = _avoiding("k'", avoid | {pp})
        yy = y if y != WILD else "y"
        zz = z if z != WILD else "z"
        if yy in (pp, kk):
            yy = fresh_name(yy, avoid | {pp, kk})
        if zz in (pp, kk):
            zz = fresh_name(zz, avoid | {pp, kk})
        resume = Lam(PPair(PVar(pp), PVar(kk)),
                     Sc(r.label, r.arg, yy, App(Var(pp), Var(yy)), zz, App(Var(kk), Var(zz))))
        sub = {fw.fvar: resume, fw.pvar: _lam(y, Handle(hv, c1)), fw.kvar: _lam(z, Handle(hv, c2))}
        return Stepped(subst(fw.body, {k: v for k, v in sub.items() if k != WILD}), "E-FwdSc")
    raise AssertionError(r)


def step(c: Comp, env: Mapping = {}, use_bind: bool = False) -> StepResult:
    """One reduction step.

    With ``use_bind`` set, handlers that were written with a `bind` clause
    forward scoped operations by the direct bind rule instead of through their
    desugared `fwd` clause.
    """
    try:
        return _step(c, env, use_bind)
    except _StuckSignal as e:
        return Stuck(e.reason, e.prim_error)


@dataclass
class Trace:
    steps: list = field(default_factory=list)  # of (rule, Comp)
    final: Optional[StepResult] = None
    fuel_used: int = 0
    contexts: list = field(default_factory=list)


def _deep_enough():
    if sys.getrecursionlimit() < 20000:
        sys.setrecursionlimit(20000)


def evaluate(c: Comp, env: Mapping = {}, fuel: int = DEFAULT_FUEL, use_bind: bool = False) -> StepResult:
    if fuel < 1:
        raise ValueError("fuel must be positive")
    _deep_enough()
    for _ in range(fuel):
        r = step(c, env, use_bind)
        if not isinstance(r, Stepped):
            return r
        c = r.term
    r = step(c, env, use_bind)
    if isinstance(r, Stepped):
        return FuelExhausted(c, fuel)
    return r


def trace(c: Comp, env: Mapping = {}, fuel: int = DEFAULT_FUEL, use_bind: bool = False) -> Trace:
    if fuel < 1:
        raise ValueError("fuel must be positive")
    _deep_enough()
    t = Trace()
    for _ in range(fuel):
        r = step(c, env, use_bind)
        if not isinstance(r, Stepped):
            t.final = r
            return t
        c = r.term
        t.steps.append((r.rule, c))
        t.contexts.append(r.context)
        t.fuel_used += 1
    r = step(c, env, use_bind)
    t.final = r if not isinstance(r, Stepped) else FuelExhausted(c, fuel)
    return t
