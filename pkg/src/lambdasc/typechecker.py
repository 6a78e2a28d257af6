"""Type-and-effect inference.

Inference is Hindley-Milner with levels: every unification variable records
the let-nesting depth at which it was created, and generalization quantifies
exactly the variables deeper than the current level.  Effect rows unify in the
style of Koka: the multiset difference of labels on each side is absorbed by
the other side's open tail, and two open tails meet at a fresh shared tail.

Handlers are always checked polymorphically.  The carrier annotation `M` is a
one-parameter type operator; the answer type `a` is a rigid variable (a
skolem) while the clauses are checked, and becomes an ordinary unification
variable in the resulting handler type.  Skolems carry a level too, so a
skolem leaking into an outer type is reported as a mismatch.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import Diagnostic
from .syntax import (
    WILD, Absurd, App, Case, Comp, Con, Do, Handle, Handler, HandlerVal, If, Lam, Let, Lit,
    Op, PCon, PLit, PPair, PUnit, PVar, PWild, Pair, Prim, Program, Return, Sc, Unit, Value,
    Var,
)
from .types import (
    BOOL, CHAR, EMPTY, INT, STRING, UNIT, CompType, OpSig, RMeta, RVar, Row, Scheme, TApp,
    TCon, TFun, THandler, TLam, TMeta, TPair, TVar, TermBinding, TypeContext, ValueType,
    canonical_scheme, frv, ftv, list_of, pretty_comp, pretty_scheme, pretty_type,
    reduce_type, subst_type, )

LIT_TYPES = {"Int": INT, "Bool": BOOL, "Char": CHAR, "String": STRING, "Unit": UNIT}
SKOLEM_PREFIX = "$"


class TypeErrorSignal(Exception):
    """Internal: aborts checking of the current definition."""

    def __init__(self, diag: Diagnostic):
        super().__init__(diag.format())
        self.diagnostic = diag


@dataclass
class InferenceState:
    """Substitution, fresh-variable supply and accumulated diagnostics."""

    tsub: dict = field(default_factory=dict)   # meta id -> ValueType
    rsub: dict = field(default_factory=dict)   # row meta id -> Row
    tlevel: dict = field(default_factory=dict)
    rlevel: dict = field(default_factory=dict)
    sklevel: dict = field(default_factory=dict)  # skolem name -> level
    counter: itertools.count = field(default_factory=lambda: itertools.count(1))
    level: int = 0
    errors: list = field(default_factory=list)

    def fresh_meta(self) -> TMeta:
        m = TMeta(next(self.counter))
        self.tlevel[m.id] = self.level
        return m

    def fresh_row(self, labels=()) -> Row:
        r = RMeta(next(self.counter))
        self.rlevel[r.id] = self.level
        return Row(tuple(labels), r)

    def fresh_comp(self) -> CompType:
        return CompType(self.fresh_meta(), self.fresh_row())

    def skolem(self, base: str = "a") -> TVar:
        name = f"{SKOLEM_PREFIX}{base}{next(self.counter)}"
        self.sklevel[name] = self.level
        return TVar(name)

    # --- applying the substitution

    def zonk(self, t):
        if isinstance(t, TMeta):
            s = self.tsub.get(t.id)
            if s is None:
                return t
            z = self.zonk(s)
            self.tsub[t.id] = z
            return z
        if isinstance(t, Row):
            if isinstance(t.tail, RMeta) and t.tail.id in self.rsub:
                z = self.zonk(self.rsub[t.tail.id])
                self.rsub[t.tail.id] = z
                return Row(t.labels + z.labels, z.tail)
            return t
        if isinstance(t, (TVar,)):
            return t
        if isinstance(t, TCon):
            return TCon(t.name, tuple(self.zonk(a) for a in t.args)) if t.args else t
        if isinstance(t, TPair):
            return TPair(self.zonk(t.fst), self.zonk(t.snd))
        if isinstance(t, TFun):
            return TFun(self.zonk(t.arg), self.zonk(t.res))
        if isinstance(t, THandler):
            return THandler(self.zonk(t.src), self.zonk(t.dst))
        if isinstance(t, CompType):
            return CompType(self.zonk(t.value), self.zonk(t.row))
        if isinstance(t, TApp):
            return reduce_type(TApp(self.zonk(t.fn), self.zonk(t.arg)))
        if isinstance(t, TLam):
            return TLam(t.param, self.zonk(t.body))
        if isinstance(t, Scheme):
            return Scheme(t.tvars, t.rvars, self.zonk(t.body))
        raise TypeError(f"not a type: {t!r}")


def _metas(t, tacc: set, racc: set, sks: set) -> None:
    if isinstance(t, TMeta):
        tacc.add(t.id)
    elif isinstance(t, TVar):
        if t.name.startswith(SKOLEM_PREFIX):
            sks.add(t.name)
    elif isinstance(t, TCon):
        for a in t.args:
            _metas(a, tacc, racc, sks)
    elif isinstance(t, TPair):
        _metas(t.fst, tacc, racc, sks)
        _metas(t.snd, tacc, racc, sks)
    elif isinstance(t, TFun):
        _metas(t.arg, tacc, racc, sks)
        _metas(t.res, tacc, racc, sks)
    elif isinstance(t, THandler):
        _metas(t.src, tacc, racc, sks)
        _metas(t.dst, tacc, racc, sks)
    elif isinstance(t, CompType):
        _metas(t.value, tacc, racc, sks)
        _metas(t.row, tacc, racc, sks)
    elif isinstance(t, Row):
        if isinstance(t.tail, RMeta):
            racc.add(t.tail.id)
    elif isinstance(t, TApp):
        _metas(t.fn, tacc, racc, sks)
        _metas(t.arg, tacc, racc, sks)
    elif isinstance(t, TLam):
        _metas(t.body, tacc, racc, sks)
    elif isinstance(t, Scheme):
        _metas(t.body, tacc, racc, sks)


def subst_metas(t, tmap: dict, rmap: dict):
    """Replace metas (by id) with types / rows; used for generalization."""
    if isinstance(t, TMeta):
        return tmap.get(t.id, t)
    if isinstance(t, Row):
        if isinstance(t.tail, RMeta) and t.tail.id in rmap:
            r = rmap[t.tail.id]
            return Row(t.labels + r.labels, r.tail)
        return t
    if isinstance(t, TVar):
        return t
    if isinstance(t, TCon):
        return TCon(t.name, tuple(subst_metas(a, tmap, rmap) for a in t.args)) if t.args else t
    if isinstance(t, TPair):
        return TPair(subst_metas(t.fst, tmap, rmap), subst_metas(t.snd, tmap, rmap))
    if isinstance(t, TFun):
        return TFun(subst_metas(t.arg, tmap, rmap), subst_metas(t.res, tmap, rmap))
    if isinstance(t, THandler):
        return THandler(subst_metas(t.src, tmap, rmap), subst_metas(t.dst, tmap, rmap))
    if isinstance(t, CompType):
        return CompType(subst_metas(t.value, tmap, rmap), subst_metas(t.row, tmap, rmap))
    if isinstance(t, TApp):
        return TApp(subst_metas(t.fn, tmap, rmap), subst_metas(t.arg, tmap, rmap))
    if isinstance(t, TLam):
        return TLam(t.param, subst_metas(t.body, tmap, rmap))
    raise TypeError(f"not a type: {t!r}")


def _multiset_minus(a: tuple, b: tuple) -> list:
    rest = list(b)
    out = []
    for x in a:
        if x in rest:
            rest.remove(x)
        else:
            out.append(x)
    return out


# --------------------------------------------------------------------------
# unification


def _mismatch(st: InferenceState, kind: str, a, b, note: str = "", span=None):
    raise TypeErrorSignal(Diagnostic(kind, span, render(st, a), render(st, b), note))


def render(st: InferenceState, t) -> str:
    t = st.zonk(t)
    tv = set()
    ftv(t, tv)
    sks = {v: TVar(v[1:].rstrip("0123456789")) for v in tv if v.startswith(SKOLEM_PREFIX)}
    if sks:
        t = subst_type(t, sks)
    if isinstance(t, Row):
        from .types import pretty_row
        return pretty_row(t)
    return pretty_type(t)


def _bind_meta(st: InferenceState, m: TMeta, t, span) -> None:
    tm, rm, sks = set(), set(), set()
    _metas(t, tm, rm, sks)
    if m.id in tm:
        _mismatch(st, "OccursCheck", m, t, "infinite type", span)
    lvl = st.tlevel[m.id]
    for s in sks:
        if st.sklevel.get(s, 0) > lvl:
            _mismatch(st, "TypeMismatch", m, t, "a handler's type variable would escape its scope",
                      span)
    for i in tm:
        if st.tlevel[i] > lvl:
            st.tlevel[i] = lvl
    for i in rm:
        if st.rlevel[i] > lvl:
            st.rlevel[i] = lvl
    st.tsub[m.id] = t


def _bind_row(st: InferenceState, r: RMeta, row: Row, span) -> None:
    if row.tail == r:
        _mismatch(st, "OccursCheck", Row((), r), row, "infinite row", span)
    lvl = st.rlevel[r.id]
    if isinstance(row.tail, RMeta) and st.rlevel[row.tail.id] > lvl:
        st.rlevel[row.tail.id] = lvl
    st.rsub[r.id] = row


def unify_value(a, b, st: InferenceState, span=None) -> InferenceState:
    """Most general unifier of two value (or computation) types, extending `st`."""
    a = reduce_type(st.zonk(a))
    b = reduce_type(st.zonk(b))
    _unify(st, a, b, span)
    return st


def _unify(st: InferenceState, a, b, span) -> None:
    if isinstance(a, TMeta) or isinstance(b, TMeta):
        a, b = st.zonk(a), st.zonk(b)
    if a == b:
        return
    if isinstance(a, TMeta):
        _bind_meta(st, a, b, span)
        return
    if isinstance(b, TMeta):
        _bind_meta(st, b, a, span)
        return
    if isinstance(a, CompType) and isinstance(b, CompType):
        _unify(st, a.value, b.value, span)
        unify_row(a.row, b.row, st, span)
        return
    if type(a) is not type(b):
        _mismatch(st, "TypeMismatch", a, b, span=span)
    if isinstance(a, TVar):
        _mismatch(st, "TypeMismatch", a, b, span=span)
    if isinstance(a, TCon):
        if a.name != b.name or len(a.args) != len(b.args):
            _mismatch(st, "TypeMismatch", a, b, span=span)
        for x, y in zip(a.args, b.args):
            _unify(st, x, y, span)
        return
    if isinstance(a, TPair):
        _unify(st, a.fst, b.fst, span)
        _unify(st, a.snd, b.snd, span)
        return
    if isinstance(a, TFun):
        _unify(st, a.arg, b.arg, span)
        _unify(st, a.res, b.res, span)
        return
    if isinstance(a, THandler):
        _unify(st, a.src, b.src, span)
        _unify(st, a.dst, b.dst, span)
        return
    if isinstance(a, TLam):
        sk = st.skolem("l")
        _unify(st, subst_type(a.body, {a.param: sk}), subst_type(b.body, {b.param: sk}), span)
        return
    if isinstance(a, TApp):
        _unify(st, a.fn, b.fn, span)
        _unify(st, a.arg, b.arg, span)
        return
    _mismatch(st, "TypeMismatch", a, b, span=span)


def unify_row(e: Row, f: Row, st: InferenceState, span=None) -> InferenceState:
    """Unify two effect rows; surplus labels are absorbed by open tails."""
    e, f = st.zonk(e), st.zonk(f)
    only_e = _multiset_minus(e.labels, f.labels)
    only_f = _multiset_minus(f.labels, e.labels)
    te, tf = e.tail, f.tail
    if te == tf:
        if only_e or only_f:
            kind = "OccursCheck" if isinstance(te, RMeta) else "RowMismatch"
            _mismatch(st, kind, e, f, span=span)
        return st
    if only_e and not isinstance(tf, RMeta):
        _mismatch(st, "RowMismatch", e, f, f"label {only_e[0]} is not allowed", span)
    if only_f and not isinstance(te, RMeta):
        _mismatch(st, "RowMismatch", e, f, f"label {only_f[0]} is not allowed", span)
    if isinstance(te, RMeta) and isinstance(tf, RMeta):
        if not only_e and not only_f:
            _bind_row(st, te, Row((), tf), span)
            return st
        saved = st.level
        st.level = min(st.rlevel[te.id], st.rlevel[tf.id])
        rho = st.fresh_row().tail
        st.level = saved
        _bind_row(st, te, Row(tuple(only_f), rho), span)
        _bind_row(st, tf, Row(tuple(only_e), rho), span)
        return st
    if isinstance(te, RMeta):
        _bind_row(st, te, Row(tuple(only_f), tf), span)
        return st
    if isinstance(tf, RMeta):
        _bind_row(st, tf, Row(tuple(only_e), te), span)
        return st
    _mismatch(st, "RowMismatch", e, f, span=span)
    return st


# --------------------------------------------------------------------------
# exhaustiveness


def _ctor_key(p):
    if isinstance(p, PUnit):
        return ("()", 0)
    if isinstance(p, PPair):
        return ("(,)", 2)
    if isinstance(p, PLit):
        if p.kind == "Bool":
            return ("true" if p.value else "false", 0)
        if p.kind == "String" and p.value == "":
            return ("[]", 0)
        return (("lit", p.kind, p.value), 0)
    if isinstance(p, PCon):
        return (p.name, len(p.args))
    return None


def _sub_pats(p, arity: int) -> list:
    if isinstance(p, PPair):
        return [p.fst, p.snd]
    if isinstance(p, PCon):
        return list(p.args)
    return [PWild()] * arity


class Exhaustiveness:
    """Pattern-matrix usefulness check over constructor patterns."""

    def __init__(self, families: dict):
        self.families = families  # ctor name -> list of (name, arity) of its type

    def _complete(self, heads: set) -> Optional[list]:
        names = {h[0] for h in heads}
        for h in heads:
            fam = self.signature(h[0])
            if fam is None:
                return None
            if {n for n, _ in fam} <= names:
                return fam
            return None
        return None

    def signature(self, name) -> Optional[list]:
        if name == "()":
            return [("()", 0)]
        if name == "(,)":
            return [("(,)", 2)]
        if name in ("true", "false"):
            return [("true", 0), ("false", 0)]
        if isinstance(name, tuple):
            return None
        return self.families.get(name)

    def useful(self, rows: list, q: list) -> bool:
        if not q:
            return not rows
        head = _ctor_key(q[0])
        if head is not None:
            name, arity = head
            return self.useful(self._specialize(rows, name, arity), _sub_pats(q[0], arity) + q[1:])
        heads = {k for r in rows if (k := _ctor_key(r[0])) is not None}
        sig = self._complete(heads) if heads else None
        if sig is not None:
            return any(self.useful(self._specialize(rows, n, a), [PWild()] * a + q[1:])
                       for n, a in sig)
        default = [r[1:] for r in rows if _ctor_key(r[0]) is None]
        return self.useful(default, q[1:])

    def _specialize(self, rows: list, name, arity: int) -> list:
        out = []
        for r in rows:
            k = _ctor_key(r[0])
            if k is None:
                out.append([PWild()] * arity + r[1:])
            elif k[0] == name:
                out.append(_sub_pats(r[0], arity) + r[1:])
        return out

    def exhaustive(self, pats: list) -> bool:
        return not self.useful([[p] for p in pats], [PWild()])


# --------------------------------------------------------------------------
# the checker


def _lit_type(v: Lit) -> ValueType:
    return LIT_TYPES[v.kind]


_ARITH = {"+", "-", "*"}
_COMPARE = {">", "<", ">=", "<="}


@dataclass
class CheckResult:
    schemes: dict            # def name -> Scheme
    comps: dict              # named computation -> CompType (generalized names)
    main: Optional[CompType]
    diagnostics: list


class Checker:
    """Holds the global environment (declarations and top-level schemes)."""

    def __init__(self, tables, state: Optional[InferenceState] = None):
        self.tables = tables
        self.st = state or InferenceState()
        self.globals: dict = {}  # name -> Scheme
        self.span = None
        fams: dict = {}
        by_type: dict = {}
        for info in tables.ctors.values():
            by_type.setdefault(info.datatype, []).append((info.name, len(info.args)))
        for fam in by_type.values():
            for n, _ in fam:
                fams[n] = fam
        self.exh = Exhaustiveness(fams)

    # --- helpers

    def _here(self, node):
        sp = getattr(node, "span", None)
        if sp is not None:
            self.span = sp
        return self.span

    def _fail(self, kind: str, note: str, expected=None, actual=None):
        raise TypeErrorSignal(Diagnostic(kind, self.span, expected, actual, note))

    def unify(self, a, b) -> None:
        unify_value(a, b, self.st, self.span)

    def unify_row(self, e: Row, f: Row) -> None:
        unify_row(e, f, self.st, self.span)

    def instantiate(self, s: Scheme) -> ValueType:
        tmap = {v: self.st.fresh_meta() for v in s.tvars}
        rmap = {v: self.st.fresh_row() for v in s.rvars}
        return subst_type(s.body, tmap, rmap)

    def instantiate_free(self, *ts):
        """Replace every named variable in the given types by fresh metas (shared)."""
        tv, rv = set(), set()
        for t in ts:
            ftv(t, tv)
            frv(t, rv)
        tmap = {v: self.st.fresh_meta() for v in sorted(tv)}
        rmap = {v: self.st.fresh_row() for v in sorted(rv)}
        return [subst_type(t, tmap, rmap) for t in ts]

    def generalize(self, t, level: int) -> Scheme:
        t = self.st.zonk(t)
        tm, rm, _ = set(), set(), set()
        _metas(t, tm, rm, _)
        tq = sorted(i for i in tm if self.st.tlevel[i] > level)
        rq = sorted(i for i in rm if self.st.rlevel[i] > level)
        tnames = {i: f"t{i}" for i in tq}
        rnames = {i: f"r{i}" for i in rq}
        body = subst_metas(t, {i: TVar(n) for i, n in tnames.items()},
                           {i: Row((), RVar(n)) for i, n in rnames.items()})
        return Scheme(tuple(tnames.values()), tuple(rnames.values()), body)

    def effect(self, label: str, flavor: str) -> tuple:
        sig: Optional[OpSig] = self.tables.effects.get(label)
        if sig is None:
            self._fail("UnknownLabel", f"unknown effect label {label}")
        if sig.flavor != flavor:
            self._fail("LabelFlavorMismatch", f"label {label} is declared as {sig.flavor}",
                       flavor, sig.flavor)
        a, b = self.instantiate_free(sig.arg, sig.res)
        return a, b

    def lookup(self, env: dict, name: str) -> ValueType:
        if name in env:
            s = env[name]
        elif name in self.globals:
            s = self.globals[name]
        else:
            self._fail("UnboundVar", f"unbound variable {name}")
        return self.instantiate(s) if isinstance(s, Scheme) else s

    # --- patterns

    def pattern(self, p, t: ValueType, binds: dict) -> None:
        self._here(p)
        if isinstance(p, PVar):
            binds[p.name] = t
        elif isinstance(p, PWild):
            pass
        elif isinstance(p, PUnit):
            self.unify(t, UNIT)
        elif isinstance(p, PPair):
            a, b = self.st.fresh_meta(), self.st.fresh_meta()
            self.unify(t, TPair(a, b))
            self.pattern(p.fst, a, binds)
            self.pattern(p.snd, b, binds)
        elif isinstance(p, PLit):
            self.unify(t, LIT_TYPES[p.kind])
        elif isinstance(p, PCon):
            info = self.tables.ctors.get(p.name)
            if info is None:
                self._fail("UnboundVar", f"unknown constructor {p.name}")
            if len(info.args) != len(p.args):
                self._fail("AnnotationArity", f"constructor {p.name} has {len(info.args)} fields",
                           str(len(info.args)), str(len(p.args)))
            tmap = {v: self.st.fresh_meta() for v in info.params}
            self.unify(t, TCon(info.datatype, tuple(tmap[v] for v in info.params)))
            for q, ft in zip(p.args, info.args):
                self.pattern(q, subst_type(ft, tmap), binds)
        else:
            raise TypeError(f"not a pattern: {p!r}")

    def check_exhaustive(self, pats: list) -> None:
        if not self.exh.exhaustive(pats):
            self._fail("NonExhaustiveCase", "patterns do not cover every value")

    # --- values

    def infer_value(self, env: dict, v: Value) -> ValueType:
        self._here(v)
        if isinstance(v, Unit):
            return UNIT
        if isinstance(v, Lit):
            return _lit_type(v)
        if isinstance(v, Var):
            return self.lookup(env, v.name)
        if isinstance(v, Pair):
            return TPair(self.infer_value(env, v.fst), self.infer_value(env, v.snd))
        if isinstance(v, Lam):
            a = self.st.fresh_meta()
            binds: dict = {}
            self.pattern(v.pat, a, binds)
            self.check_exhaustive([v.pat])
            c = self.infer_comp({**env, **binds}, v.body)
            return TFun(a, c)
        if isinstance(v, Con):
            info = self.tables.ctors.get(v.name)
            if info is None:
                self._fail("UnboundVar", f"unknown constructor {v.name}")
            if len(info.args) != len(v.args):
                self._fail("AnnotationArity", f"constructor {v.name} has {len(info.args)} fields",
                           str(len(info.args)), str(len(v.args)))
            tmap = {p: self.st.fresh_meta() for p in info.params}
            for a, ft in zip(v.args, info.args):
                at = self.infer_value(env, a)
                self._here(a)
                self.unify(at, subst_type(ft, tmap))
            return TCon(info.datatype, tuple(tmap[p] for p in info.params))
        if isinstance(v, HandlerVal):
            return self.check_handler(env, v.handler)
        raise TypeError(f"not a value: {v!r}")

    # --- computations

    def infer_comp(self, env: dict, c: Comp) -> CompType:
        self._here(c)
        st = self.st
        if isinstance(c, Return):
            return CompType(self.infer_value(env, c.value), st.fresh_row())
        if isinstance(c, Op):
            a_op, b_op = self.effect(c.label, "op")
            at = self.infer_value(env, c.arg)
            self._here(c)
            self.unify(at, a_op)
            inner = env if c.var == WILD else {**env, c.var: b_op}
            ct = self.infer_comp(inner, c.body)
            self._here(c)
            self.unify_row(ct.row, st.fresh_row((c.label,)))
            return ct
        if isinstance(c, Sc):
            a_sc, b_sc = self.effect(c.label, "sc")
            at = self.infer_value(env, c.arg)
            self._here(c)
            self.unify(at, a_sc)
            inner = env if c.var == WILD else {**env, c.var: b_sc}
            c1 = self.infer_comp(inner, c.scoped)
            beta = st.fresh_meta()
            self._here(c)
            self.unify(c1.value, beta)
            inner2 = env if c.kvar == WILD else {**env, c.kvar: beta}
            c2 = self.infer_comp(inner2, c.body)
            self._here(c)
            self.unify_row(c1.row, c2.row)
            self.unify_row(c2.row, st.fresh_row((c.label,)))
            return c2
        if isinstance(c, Handle):
            ht = self.infer_value(env, c.handler)
            ct = self.infer_comp(env, c.body)
            out = st.fresh_comp()
            self._here(c)
            self.unify(ht, THandler(ct, out))
            return out
        if isinstance(c, Do):
            c1 = self.infer_comp(env, c.first)
            inner = env if c.var == WILD else {**env, c.var: c1.value}
            c2 = self.infer_comp(inner, c.rest)
            self._here(c)
            self.unify_row(c1.row, c2.row)
            return c2
        if isinstance(c, App):
            ft = self.infer_value(env, c.fn)
            at = self.infer_value(env, c.arg)
            out = st.fresh_comp()
            self._here(c)
            self.unify(ft, TFun(at, out))
            return out
        if isinstance(c, Let):
            st.level += 1
            try:
                vt = self.infer_value(env, c.value)
            finally:
                st.level -= 1
            s = self.generalize(vt, st.level)
            inner = env if c.var == WILD else {**env, c.var: s}
            return self.infer_comp(inner, c.body)
        if isinstance(c, If):
            ct = self.infer_value(env, c.cond)
            self._here(c)
            self.unify(ct, BOOL)
            t1 = self.infer_comp(env, c.then)
            t2 = self.infer_comp(env, c.orelse)
            self._here(c)
            self.unify(t1, t2)
            return t1
        if isinstance(c, Case):
            vt = self.infer_value(env, c.scrutinee)
            out = st.fresh_comp()
            for p, body in c.alts:
                binds: dict = {}
                self.pattern(p, vt, binds)
                bt = self.infer_comp({**env, **binds}, body)
                self._here(body)
                self.unify(bt, out)
            self._here(c)
            self.check_exhaustive([p for p, _ in c.alts])
            return out
        if isinstance(c, Absurd):
            vt = self.infer_value(env, c.value)
            self._here(c)
            self.unify(vt, EMPTY)
            return st.fresh_comp()
        if isinstance(c, Prim):
            return CompType(self.prim(env, c), st.fresh_row())
        raise TypeError(f"not a computation: {c!r}")

    def prim(self, env: dict, c: Prim) -> ValueType:
        args = [self.infer_value(env, a) for a in c.args]
        self._here(c)
        op = c.op
        if op in _ARITH:
            for a in args:
                self.unify(a, INT)
            return INT
        if op in _COMPARE:
            for a in args:
                self.unify(a, INT)
            return BOOL
        if op == "=":
            self.unify(args[0], args[1])
            return BOOL
        if op == "++":
            a = list_of(self.st.fresh_meta())
            for t in args:
                self.unify(t, a)
            return a
        if op == "head":
            a = self.st.fresh_meta()
            self.unify(args[0], list_of(a))
            return a
        if op == "read":
            self.unify(args[0], STRING)
            return INT
        if op == "not":
            self.unify(args[0], BOOL)
            return BOOL
        self._fail("UnboundVar", f"unknown primitive {op}")

    # --- handlers

    def check_handler(self, env: dict, h: Handler) -> ValueType:
        self._here(h)
        st = self.st
        ann = h.annotation if h.annotation is not None else TLam("a", TVar("a"))
        if not isinstance(ann, TLam):
            self._fail("AnnotationArity", "a handler annotation must be a one-parameter "
                       "type operator `fun a -> T`", "fun a -> T", pretty_type(ann))
        if h.fwd is None:
            self._fail("MissingFwd", "handler has no fwd (or bind) clause")
        (m,) = self.instantiate_free(ann)
        e = st.fresh_row()

        def carrier(t):
            return reduce_type(TApp(m, t))

        st.level += 1
        try:
            alpha = st.skolem("a")
            target = CompType(carrier(alpha), e)
            # return clause
            self._here(h.ret)
            rt = self.infer_comp(env if h.ret.var == WILD else {**env, h.ret.var: alpha},
                                 h.ret.body)
            self._here(h.ret)
            self.unify(rt, target)
            labels = []
            for cl in h.ops:
                self._here(cl)
                a_op, b_op = self.effect(cl.label, "op")
                labels.append(cl.label)
                inner = dict(env)
                if cl.var != WILD:
                    inner[cl.var] = a_op
                if cl.kvar != WILD:
                    inner[cl.kvar] = TFun(b_op, target)
                bt = self.infer_comp(inner, cl.body)
                self._here(cl)
                self.unify(bt, target)
            for cl in h.scs:
                self._here(cl)
                a_sc, b_sc = self.effect(cl.label, "sc")
                labels.append(cl.label)
                st.level += 1
                try:
                    beta = st.skolem("b")
                    inner = dict(env)
                    if cl.var != WILD:
                        inner[cl.var] = a_sc
                    if cl.pvar != WILD:
                        inner[cl.pvar] = TFun(b_sc, CompType(carrier(beta), e))
                    if cl.kvar != WILD:
                        inner[cl.kvar] = TFun(beta, target)
                    bt = self.infer_comp(inner, cl.body)
                    self._here(cl)
                    self.unify(bt, target)
                finally:
                    st.level -= 1
            fw = h.fwd
            self._here(fw)
            st.level += 1
            try:
                a1, b1 = st.skolem("p"), st.skolem("q")
                n = next(st.counter)
                g, d = f"g{n}", f"d{n}"
                f_scheme = Scheme((g, d), (), TFun(
                    TPair(TFun(a1, CompType(TVar(g), e)), TFun(TVar(g), CompType(TVar(d), e))),
                    CompType(TVar(d), e)))
                inner = dict(env)
                if fw.fvar != WILD:
                    inner[fw.fvar] = f_scheme
                if fw.pvar != WILD:
                    inner[fw.pvar] = TFun(a1, CompType(carrier(b1), e))
                if fw.kvar != WILD:
                    inner[fw.kvar] = TFun(b1, target)
                bt = self.infer_comp(inner, fw.body)
                self._here(fw)
                self.unify(bt, target)
            finally:
                st.level -= 1
        finally:
            st.level -= 1
        ht = st.zonk(THandler(CompType(alpha, Row(tuple(labels), e.tail)), target))
        # the answer type becomes an ordinary variable at the use site
        return subst_type(ht, {alpha.name: st.fresh_meta()})

    # --- definitions

    def _def_type(self, name: str, annotation: Optional[Scheme], value: Value) -> Scheme:
        st = self.st
        if annotation is None:
            st.level += 1
            try:
                t = self.infer_value({}, value)
            finally:
                st.level -= 1
            return self.generalize(t, st.level)
        st.level += 1
        try:
            sks = {v: st.skolem(v) for v in annotation.tvars}
            rks = {v: Row((), RVar(st.skolem(v).name)) for v in annotation.rvars}
            expected = subst_type(annotation.body, sks, rks)
            t = self.infer_value({}, value)
            self.unify(t, expected)
        finally:
            st.level -= 1
        return annotation

    def infer_closed(self, c: Comp) -> CompType:
        """Type of a closed computation, with its open variables left as metas."""
        self.span = getattr(c, "span", None)
        return self.st.zonk(self.infer_comp({}, c))

    def check_program(self, prog: Program) -> CheckResult:
        diags: list = []
        schemes: dict = {}
        comps: dict = {}
        main_t = None
        # annotated definitions are visible everywhere, enabling (mutual) recursion
        for d in prog.defs:
            if d.annotation is not None:
                self.globals[d.name] = d.annotation
        for d in prog.defs:
            self.span = d.span
            try:
                s = self._def_type(d.name, d.annotation, d.value)
            except TypeErrorSignal as ex:
                diags.append(ex.diagnostic)
                s = d.annotation or Scheme(("a",), (), TVar("a"))
            self.globals[d.name] = s
            schemes[d.name] = s
        for name, c in prog.comps:
            try:
                comps[name] = self.generalize_comp(self.infer_closed_level(c))
            except TypeErrorSignal as ex:
                diags.append(ex.diagnostic)
        if prog.main is not None:
            try:
                main_t = self.generalize_comp(self.infer_closed_level(prog.main))
            except TypeErrorSignal as ex:
                diags.append(ex.diagnostic)
        return CheckResult(schemes, comps, main_t, diags)

    def infer_closed_level(self, c: Comp) -> CompType:
        self.st.level += 1
        try:
            return self.infer_closed(c)
        finally:
            self.st.level -= 1

    def generalize_comp(self, ct: CompType) -> CompType:
        """Name the open variables of a computation type (for display)."""
        ct = self.st.zonk(ct)
        tm, rm, _ = set(), set(), set()
        _metas(ct, tm, rm, _)
        body = subst_metas(ct, {i: TVar(f"t{i}") for i in tm}, {i: Row((), RVar(f"r{i}")) for i in rm})
        fake = canonical_scheme(Scheme(tuple(f"t{i}" for i in tm), tuple(f"r{i}" for i in rm),
                                       TFun(UNIT, body)))
        return fake.body.res


# --------------------------------------------------------------------------
# functional entry points


def _env_of(g: Optional[TypeContext]) -> dict:
    if g is None:
        return {}
    return {e.name: e.scheme for e in g.entries if isinstance(e, TermBinding)}


def infer_value(g: Optional[TypeContext], v: Value, st: InferenceState, tables=None) -> ValueType:
    from .desugar import Tables
    ch = Checker(tables or Tables(), st)
    return st.zonk(ch.infer_value(_env_of(g), v))


def infer_computation(g: Optional[TypeContext], c: Comp, st: InferenceState,
                      tables=None) -> CompType:
    from .desugar import Tables
    ch = Checker(tables or Tables(), st)
    return st.zonk(ch.infer_comp(_env_of(g), c))


def check_handler(g: Optional[TypeContext], h: Handler, st: InferenceState,
                  tables=None) -> ValueType:
    from .desugar import Tables
    ch = Checker(tables or Tables(), st)
    return st.zonk(ch.check_handler(_env_of(g), h))


def generalize(g: Optional[TypeContext], a: ValueType, st: InferenceState) -> Scheme:
    """Quantify the variables of `a` that do not occur free in `g`."""
    a = st.zonk(a)
    fixed_t, fixed_r, _ = set(), set(), set()
    for s in _env_of(g).values():
        _metas(st.zonk(s.body if isinstance(s, Scheme) else s), fixed_t, fixed_r, _)
    tm, rm, _ = set(), set(), set()
    _metas(a, tm, rm, _)
    tq = sorted(tm - fixed_t)
    rq = sorted(rm - fixed_r)
    body = subst_metas(a, {i: TVar(f"t{i}") for i in tq}, {i: Row((), RVar(f"r{i}")) for i in rq})
    tv = sorted(ftv(body) - (set() if g is None else _ctx_tvars(g)))
    rv = sorted(frv(body) - (set() if g is None else _ctx_rvars(g)))
    return Scheme(tuple(tv), tuple(rv), body)


def _ctx_tvars(g: TypeContext) -> set:
    out = set(g.tyvars())
    for s in _env_of(g).values():
        ftv(s, out)
    return out


def _ctx_rvars(g: TypeContext) -> set:
    out = set(g.rowvars())
    for s in _env_of(g).values():
        frv(s, out)
    return out


def show_scheme(s: Scheme) -> str:
    return pretty_scheme(s)


def show_comp(c: CompType) -> str:
    return pretty_comp(c)
