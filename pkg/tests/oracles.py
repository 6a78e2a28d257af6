"""Independent reference implementations used to cross-check the library."""

from __future__ import annotations

import itertools
from collections import deque

from lambdasc.types import (
    CompType, RVar, Row, TApp, TCon, TFun, THandler, TLam, TPair, subst_type,
)


# --- rows as sequences, related by the five row-equivalence rules ----------
#
# A row is a tuple of labels plus a tail (None or a variable name).  Refl,
# Symm and Trans make the relation an equivalence; Head is congruence under
# extension; Swap exchanges adjacent distinct labels.  The closure of a row
# is therefore reachable by adjacent swaps of distinct labels, found by BFS.


def swap_closure(labels: tuple) -> set:
    seen = {labels}
    todo = deque([labels])
    while todo:
        r = todo.popleft()
        for i in range(len(r) - 1):
            if r[i] != r[i + 1]:
                s = r[:i] + (r[i + 1], r[i]) + r[i + 2:]
                if s not in seen:
                    seen.add(s)
                    todo.append(s)
    return seen


def rows_related(a: tuple, ta, b: tuple, tb) -> bool:
    """Rows are related iff tails agree and b's labels are in a's swap closure."""
    return ta == tb and b in swap_closure(a)


def all_rows(labels=("a", "b", "c"), max_len: int = 4, tails=(None, "m1", "m2")):
    for n in range(max_len + 1):
        for seq in itertools.product(labels, repeat=n):
            for t in tails:
                yield seq, t


def to_row(seq: tuple, tail) -> Row:
    return Row(seq, None if tail is None else RVar(tail))


# --- types: naive rewriting to beta-normal form ---------------------------


def naive_reduce(t):
    """Rewrite the leftmost-outermost type-level redex until none remain."""
    while True:
        t2, changed = _rewrite_once(t)
        if not changed:
            return t
        t = t2


def _rewrite_once(t):
    if isinstance(t, TApp) and isinstance(t.fn, TLam):
        return subst_type(t.fn.body, {t.fn.param: t.arg}), True
    if isinstance(t, TApp):
        fn, c = _rewrite_once(t.fn)
        if c:
            return TApp(fn, t.arg), True
        arg, c = _rewrite_once(t.arg)
        return TApp(t.fn, arg), c
    if isinstance(t, TCon):
        for i, a in enumerate(t.args):
            a2, c = _rewrite_once(a)
            if c:
                return TCon(t.name, t.args[:i] + (a2,) + t.args[i + 1:]), True
        return t, False
    if isinstance(t, TPair):
        a, c = _rewrite_once(t.fst)
        if c:
            return TPair(a, t.snd), True
        b, c = _rewrite_once(t.snd)
        return TPair(t.fst, b), c
    if isinstance(t, TFun):
        a, c = _rewrite_once(t.arg)
        if c:
            return TFun(a, t.res), True
        v, c = _rewrite_once(t.res.value)
        return TFun(t.arg, CompType(v, t.res.row)), c
    if isinstance(t, THandler):
        s, c = _rewrite_once(t.src.value)
        if c:
            return THandler(CompType(s, t.src.row), t.dst), True
        d, c = _rewrite_once(t.dst.value)
        return THandler(t.src, CompType(d, t.dst.row)), c
    if isinstance(t, TLam):
        b, c = _rewrite_once(t.body)
        return TLam(t.param, b), c
    return t, False


# --- free variables by brute-force name scan ------------------------------


def brute_free_vars(term) -> set:
    """Free variables found by walking every node and tracking binders by hand."""
    from lambdasc import syntax as S

    out: set = set()

    def pat_names(p):
        return set(S.pattern_vars(p))

    def go(t, bound: frozenset):
        if isinstance(t, S.Var):
            if t.name not in bound:
                out.add(t.name)
        elif isinstance(t, S.Lam):
            go(t.body, bound | pat_names(t.pat))
        elif isinstance(t, (S.Op,)):
            go(t.arg, bound)
            go(t.body, bound | {t.var})
        elif isinstance(t, S.Sc):
            go(t.arg, bound)
            go(t.scoped, bound | {t.var})
            go(t.body, bound | {t.kvar})
        elif isinstance(t, S.Do):
            go(t.first, bound)
            go(t.rest, bound | {t.var})
        elif isinstance(t, S.Let):
            go(t.value, bound)
            go(t.body, bound | {t.var})
        elif isinstance(t, S.Case):
            go(t.scrutinee, bound)
            for p, body in t.alts:
                go(body, bound | pat_names(p))
        elif isinstance(t, S.HandlerVal):
            h = t.handler
            go(h.ret.body, bound | {h.ret.var})
            for c in h.ops:
                go(c.body, bound | {c.var, c.kvar})
            for c in h.scs:
                go(c.body, bound | {c.var, c.pvar, c.kvar})
            if h.fwd is not None:
                go(h.fwd.body, bound | {h.fwd.fvar, h.fwd.pvar, h.fwd.kvar})
        else:
            for v in getattr(t, "__dict__", {}).values():
                if isinstance(v, tuple):
                    for x in v:
                        if isinstance(x, S.Node):
                            go(x, bound)
                elif isinstance(v, S.Node):
                    go(v, bound)

    go(term, frozenset())
    out.discard(S.WILD)
    return out


# --- bounded search for row unifiers ---------------------------------------


def row_unifiers(e: Row, f: Row, labels=("choose", "once"), max_len: int = 2) -> list:
    """All substitutions of closed rows (length ≤ max_len) for the tails of e and f
    that make the two rows equivalent."""
    tails = sorted({t.name for t in (e.tail, f.tail) if isinstance(t, RVar)})
    cands = [tuple(s) for n in range(max_len + 1)
             for s in itertools.combinations_with_replacement(labels, n)]
    out = []
    for choice in itertools.product(cands, repeat=len(tails)):
        sub = dict(zip(tails, choice))

        def close(r: Row) -> tuple:
            extra = sub.get(r.tail.name, ()) if isinstance(r.tail, RVar) else ()
            return tuple(sorted(r.labels + extra))
        if close(e) == close(f):
            out.append(sub)
    return out
