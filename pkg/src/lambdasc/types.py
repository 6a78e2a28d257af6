"""Types, effect rows, schemes and the equivalence / well-scopedness judgements.

Rows are stored in canonical form: labels sorted by name with multiplicity
kept, followed by an optional tail.  Equivalence of types is decided by
beta-normalising type-operator applications and then comparing structurally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Union


class ValueType:
    __slots__ = ()


@dataclass(frozen=True)
class TCon(ValueType):
    """Nominal type: Unit, Int, Bool, Char, Empty, List, Sum or a user datatype."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class TPair(ValueType):
    fst: ValueType
    snd: ValueType


@dataclass(frozen=True)
class TFun(ValueType):
    arg: ValueType
    res: "CompType"


@dataclass(frozen=True)
class THandler(ValueType):
    src: "CompType"
    dst: "CompType"


@dataclass(frozen=True)
class TVar(ValueType):
    """Named (rigid) type variable."""

    name: str


@dataclass(frozen=True)
class TMeta(ValueType):
    """Unification variable, only produced by the inference engine."""

    id: int


@dataclass(frozen=True)
class TLam(ValueType):
    param: str
    body: ValueType


@dataclass(frozen=True)
class TApp(ValueType):
    fn: ValueType
    arg: ValueType


@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class RMeta:
    id: int


Tail = Union[None, RVar, RMeta]


@dataclass(frozen=True)
class Row:
    labels: tuple = ()
    tail: Tail = None

    def __post_init__(self):
        labels = tuple(sorted(self.labels))
        if labels != self.labels:
            object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class CompType:
    value: ValueType
    row: Row


@dataclass(frozen=True)
class Scheme:
    tvars: tuple
    rvars: tuple
    body: ValueType


@dataclass(frozen=True)
class OpSig:
    """Signature `A ~> B` of an effect label together with its flavor."""

    label: str
    flavor: str  # "op" | "sc"
    arg: ValueType
    res: ValueType


UNIT = TCon("Unit")
INT = TCon("Int")
BOOL = TCon("Bool")
CHAR = TCon("Char")
EMPTY = TCon("Empty")


def list_of(a: ValueType) -> TCon:
    return TCon("List", (a,))


def sum_of(a: ValueType, b: ValueType) -> TCon:
    return TCon("Sum", (a, b))


STRING = list_of(CHAR)
EMPTY_ROW = Row()


class ArityMismatch(Exception):
    pass


def mono(t: ValueType) -> Scheme:
    return Scheme((), (), t)


def row_extend(labels: Iterable[str], r: Row) -> Row:
    return Row(tuple(labels) + r.labels, r.tail)


# --------------------------------------------------------------------------
# free variables and substitution


def ftv(t, acc: set | None = None) -> set:
    """Free named type variables (TVar names) of a type, row or computation type."""
    acc = set() if acc is None else acc
    _walk_vars(t, acc, None, frozenset())
    return acc


def frv(t, acc: set | None = None) -> set:
    """Free named row variables (RVar names)."""
    acc = set() if acc is None else acc
    _walk_vars(t, None, acc, frozenset())
    return acc


def _walk_vars(t, tacc, racc, bound):
    if isinstance(t, TVar):
        if tacc is not None and t.name not in bound:
            tacc.add(t.name)
    elif isinstance(t, TCon):
        for a in t.args:
            _walk_vars(a, tacc, racc, bound)
    elif isinstance(t, TPair):
        _walk_vars(t.fst, tacc, racc, bound)
        _walk_vars(t.snd, tacc, racc, bound)
    elif isinstance(t, TFun):
        _walk_vars(t.arg, tacc, racc, bound)
        _walk_vars(t.res, tacc, racc, bound)
    elif isinstance(t, THandler):
        _walk_vars(t.src, tacc, racc, bound)
        _walk_vars(t.dst, tacc, racc, bound)
    elif isinstance(t, TLam):
        _walk_vars(t.body, tacc, racc, bound | {t.param})
    elif isinstance(t, TApp):
        _walk_vars(t.fn, tacc, racc, bound)
        _walk_vars(t.arg, tacc, racc, bound)
    elif isinstance(t, CompType):
        _walk_vars(t.value, tacc, racc, bound)
        _walk_vars(t.row, tacc, racc, bound)
    elif isinstance(t, Row):
        if racc is not None and isinstance(t.tail, RVar):
            racc.add(t.tail.name)
    elif isinstance(t, Scheme):
        inner_t = set() if tacc is not None else None
        inner_r = set() if racc is not None else None
        _walk_vars(t.body, inner_t, inner_r, bound)
        if tacc is not None:
            tacc |= inner_t - set(t.tvars)
        if racc is not None:
            racc |= inner_r - set(t.rvars)


def _fresh_name(base: str, avoid: set) -> str:
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def subst_type(t, tmap: dict, rmap: dict | None = None):
    """Simultaneous capture-avoiding substitution of named type and row variables.

    ``tmap`` maps TVar names to value types, ``rmap`` maps RVar names to rows.
    Works on value types, rows and computation types.
    """
    rmap = rmap or {}
    if not tmap and not rmap:
        return t
    if isinstance(t, TVar):
        return tmap.get(t.name, t)
    if isinstance(t, TCon):
        if not t.args:
            return t
        return TCon(t.name, tuple(subst_type(a, tmap, rmap) for a in t.args))
    if isinstance(t, TPair):
        return TPair(subst_type(t.fst, tmap, rmap), subst_type(t.snd, tmap, rmap))
    if isinstance(t, TFun):
        return TFun(subst_type(t.arg, tmap, rmap), subst_type(t.res, tmap, rmap))
    if isinstance(t, THandler):
        return THandler(subst_type(t.src, tmap, rmap), subst_type(t.dst, tmap, rmap))
    if isinstance(t, TApp):
        return TApp(subst_type(t.fn, tmap, rmap), subst_type(t.arg, tmap, rmap))
    if isinstance(t, TLam):
        inner = {k: v for k, v in tmap.items() if k != t.param}
        param, body = t.param, t.body
        captured = set()
        for v in inner.values():
            ftv(v, captured)
        if param in captured:
            new = _fresh_name(param, captured | ftv(body) | set(inner))
            body = subst_type(body, {param: TVar(new)})
            param = new
        return TLam(param, subst_type(body, inner, rmap))
    if isinstance(t, CompType):
        return CompType(subst_type(t.value, tmap, rmap), subst_type(t.row, tmap, rmap))
    if isinstance(t, Row):
        if isinstance(t.tail, RVar) and t.tail.name in rmap:
            return row_extend(t.labels, rmap[t.tail.name])
        return t
    if isinstance(t, TMeta):
        return t
    raise TypeError(f"not a type: {t!r}")


# --------------------------------------------------------------------------
# reduction and equivalence


def reduce_type(t):
    """Normalise every `(fun a -> A) B` redex, anywhere in the type."""
    if isinstance(t, TApp):
        fn = reduce_type(t.fn)
        arg = reduce_type(t.arg)
        if isinstance(fn, TLam):
            return reduce_type(subst_type(fn.body, {fn.param: arg}))
        return TApp(fn, arg)
    if isinstance(t, TCon):
        if not t.args:
            return t
        return TCon(t.name, tuple(reduce_type(a) for a in t.args))
    if isinstance(t, TPair):
        return TPair(reduce_type(t.fst), reduce_type(t.snd))
    if isinstance(t, TFun):
        return TFun(reduce_type(t.arg), reduce_type(t.res))
    if isinstance(t, THandler):
        return THandler(reduce_type(t.src), reduce_type(t.dst))
    if isinstance(t, TLam):
        return TLam(t.param, reduce_type(t.body))
    if isinstance(t, CompType):
        return CompType(reduce_type(t.value), t.row)
    if isinstance(t, Scheme):
        return Scheme(t.tvars, t.rvars, reduce_type(t.body))
    return t


def row_equiv(e1: Row, e2: Row) -> bool:
    """Rows are equivalent iff their canonical forms coincide."""
    return e1.labels == e2.labels and e1.tail == e2.tail


def _struct_eq(a, b, env: dict) -> bool:
    # env maps bound TLam parameters of `a` to those of `b`
    if isinstance(a, TVar) and isinstance(b, TVar):
        if a.name in env or b.name in env.values():
            return env.get(a.name) == b.name
        return a.name == b.name
    if type(a) is not type(b):
        return False
    if isinstance(a, TCon):
        return a.name == b.name and len(a.args) == len(b.args) and all(
            _struct_eq(x, y, env) for x, y in zip(a.args, b.args)
        )
    if isinstance(a, TPair):
        return _struct_eq(a.fst, b.fst, env) and _struct_eq(a.snd, b.snd, env)
    if isinstance(a, TFun):
        return _struct_eq(a.arg, b.arg, env) and _struct_eq(a.res, b.res, env)
    if isinstance(a, THandler):
        return _struct_eq(a.src, b.src, env) and _struct_eq(a.dst, b.dst, env)
    if isinstance(a, TApp):
        return _struct_eq(a.fn, b.fn, env) and _struct_eq(a.arg, b.arg, env)
    if isinstance(a, TLam):
        return _struct_eq(a.body, b.body, {**env, a.param: b.param})
    if isinstance(a, CompType):
        return _struct_eq(a.value, b.value, env) and row_equiv(a.row, b.row)
    if isinstance(a, Row):
        return row_equiv(a, b)
    return a == b


def type_equiv(a, b) -> bool:
    """Equivalence of value types, computation types or schemes.

    Schemes are compared up to renaming of their quantified variables.
    """
    if isinstance(a, Scheme) or isinstance(b, Scheme):
        if not (isinstance(a, Scheme) and isinstance(b, Scheme)):
            return False
        return canonical_scheme(a) == canonical_scheme(b)
    return _struct_eq(reduce_type(a), reduce_type(b), {})


# --------------------------------------------------------------------------
# schemes


def scheme_instantiate(s: Scheme, ty_args, row_args) -> ValueType:
    if len(ty_args) != len(s.tvars) or len(row_args) != len(s.rvars):
        raise ArityMismatch(
            f"scheme has {len(s.tvars)} type and {len(s.rvars)} row quantifiers, "
            f"got {len(ty_args)} and {len(row_args)} arguments"
        )
    return subst_type(s.body, dict(zip(s.tvars, ty_args)), dict(zip(s.rvars, row_args)))


def _occurrence_order(t, tseen: list, rseen: list):
    if isinstance(t, TVar):
        if t.name not in tseen:
            tseen.append(t.name)
    elif isinstance(t, TCon):
        for a in t.args:
            _occurrence_order(a, tseen, rseen)
    elif isinstance(t, TPair):
        _occurrence_order(t.fst, tseen, rseen)
        _occurrence_order(t.snd, tseen, rseen)
    elif isinstance(t, TFun):
        _occurrence_order(t.arg, tseen, rseen)
        _occurrence_order(t.res, tseen, rseen)
    elif isinstance(t, THandler):
        _occurrence_order(t.src, tseen, rseen)
        _occurrence_order(t.dst, tseen, rseen)
    elif isinstance(t, TApp):
        _occurrence_order(t.fn, tseen, rseen)
        _occurrence_order(t.arg, tseen, rseen)
    elif isinstance(t, TLam):
        _occurrence_order(t.body, tseen, rseen)
    elif isinstance(t, CompType):
        _occurrence_order(t.value, tseen, rseen)
        _occurrence_order(t.row, tseen, rseen)
    elif isinstance(t, Row):
        if isinstance(t.tail, RVar) and t.tail.name not in rseen:
            rseen.append(t.tail.name)


def _tyvar_names():
    for n in itertools.count():
        for c in "abcdefghijklmnopqrstuvwxyz":
            yield c if n == 0 else f"{c}{n}"


def _rowvar_names():
    yield "mu"
    for n in itertools.count(1):
        yield f"mu{n}"


def canonical_scheme(s: Scheme) -> Scheme:
    """Rename quantified variables by first occurrence and drop vacuous ones."""
    body = reduce_type(s.body)
    tseen: list = []
    rseen: list = []
    _occurrence_order(body, tseen, rseen)
    free_t = ftv(body) - set(s.tvars)
    free_r = frv(body) - set(s.rvars)
    tq = [v for v in tseen if v in s.tvars]
    rq = [v for v in rseen if v in s.rvars]
    tnames = (n for n in _tyvar_names() if n not in free_t)
    rnames = (n for n in _rowvar_names() if n not in free_r)
    tren = {v: next(tnames) for v in tq}
    rren = {v: next(rnames) for v in rq}
    body = subst_type(body, {k: TVar(v) for k, v in tren.items()},
                      {k: Row((), RVar(v)) for k, v in rren.items()})
    return Scheme(tuple(tren.values()), tuple(rren.values()), body)


# --------------------------------------------------------------------------
# contexts and well-scopedness


@dataclass(frozen=True)
class TermBinding:
    name: str
    scheme: Scheme


@dataclass(frozen=True)
class TyVarEntry:
    name: str


@dataclass(frozen=True)
class RowVarEntry:
    name: str


@dataclass(frozen=True)
class TypeContext:
    entries: tuple = ()
    datatypes: frozenset = field(default_factory=lambda: frozenset(
        {"Unit", "Int", "Bool", "Char", "Empty", "List", "Sum"}))

    def extend(self, *entries) -> "TypeContext":
        return TypeContext(self.entries + tuple(entries), self.datatypes)

    def tyvars(self) -> set:
        return {e.name for e in self.entries if isinstance(e, TyVarEntry)}

    def rowvars(self) -> set:
        return {e.name for e in self.entries if isinstance(e, RowVarEntry)}


def well_scoped(g: TypeContext, t) -> bool:
    return _ws(t, g.tyvars(), g.rowvars(), g.datatypes)


def _ws(t, tvs: set, rvs: set, datatypes) -> bool:
    if isinstance(t, TVar):
        return t.name in tvs
    if isinstance(t, TCon):
        return t.name in datatypes and all(_ws(a, tvs, rvs, datatypes) for a in t.args)
    if isinstance(t, TPair):
        return _ws(t.fst, tvs, rvs, datatypes) and _ws(t.snd, tvs, rvs, datatypes)
    if isinstance(t, TFun):
        return _ws(t.arg, tvs, rvs, datatypes) and _ws(t.res, tvs, rvs, datatypes)
    if isinstance(t, THandler):
        return _ws(t.src, tvs, rvs, datatypes) and _ws(t.dst, tvs, rvs, datatypes)
    if isinstance(t, TLam):
        return _ws(t.body, tvs | {t.param}, rvs, datatypes)
    if isinstance(t, TApp):
        return _ws(t.fn, tvs, rvs, datatypes) and _ws(t.arg, tvs, rvs, datatypes)
    if isinstance(t, CompType):
        return _ws(t.value, tvs, rvs, datatypes) and _ws(t.row, tvs, rvs, datatypes)
    if isinstance(t, Row):
        if t.tail is None:
            return True
        return isinstance(t.tail, RVar) and t.tail.name in rvs
    if isinstance(t, Scheme):
        return _ws(t.body, tvs | set(t.tvars), rvs | set(t.rvars), datatypes)
    # metas are never well-scoped in a declarative context
    return False


# --------------------------------------------------------------------------
# pretty printing

# precedence: 0 arrow/handler, 1 sum, 2 application, 3 atom


def pretty_row(r: Row) -> str:
    parts = list(r.labels)
    if isinstance(r.tail, RVar):
        parts.append(r.tail.name)
    elif isinstance(r.tail, RMeta):
        parts.append(f"?mu{r.tail.id}")
    return "<" + "; ".join(parts) + ">"


def pretty_comp(c: CompType) -> str:
    return f"{_pt(c.value, 1)}!{pretty_row(c.row)}"


def _paren(s: str, cond: bool) -> str:
    return f"({s})" if cond else s


def _pt(t, prec: int) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TMeta):
        return f"?t{t.id}"
    if isinstance(t, TCon):
        if t == STRING:
            return "String"
        if t.name == "Unit":
            return "()"
        if t.name == "Sum":
            return _paren(f"{_pt(t.args[0], 2)} + {_pt(t.args[1], 1)}", prec > 1)
        if not t.args:
            return t.name
        inner = " ".join([t.name] + [_pt(a, 3) for a in t.args])
        return _paren(inner, prec > 2)
    if isinstance(t, TPair):
        items = [t.fst]
        while isinstance(t.snd, TPair):
            t = t.snd
            items.append(t.fst)
        items.append(t.snd)
        return "(" + ", ".join(_pt(i, 0) for i in items) + ")"
    if isinstance(t, TFun):
        return _paren(f"{_pt(t.arg, 1)} -> {pretty_comp(t.res)}", prec > 0)
    if isinstance(t, THandler):
        return _paren(f"{pretty_comp(t.src)} => {pretty_comp(t.dst)}", prec > 0)
    if isinstance(t, TApp):
        return _paren(f"{_pt(t.fn, 2)} {_pt(t.arg, 3)}", prec > 2)
    if isinstance(t, TLam):
        return _paren(f"fun {t.param} -> {_pt(t.body, 0)}", prec > 0)
    raise TypeError(f"not a value type: {t!r}")


def pretty_type(t) -> str:
    if isinstance(t, Scheme):
        return pretty_scheme(t)
    if isinstance(t, CompType):
        return pretty_comp(t)
    if isinstance(t, Row):
        return pretty_row(t)
    return _pt(t, 0)


def pretty_scheme(s: Scheme, canonical: bool = True) -> str:
    if canonical:
        s = canonical_scheme(s)
    body = _pt(s.body, 0)
    qs = list(s.tvars) + list(s.rvars)
    return f"forall {' '.join(qs)}. {body}" if qs else body
