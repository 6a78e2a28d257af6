"""Rendering of core terms in re-parseable surface syntax.

Every operation is printed with its explicit continuation, so parsing the
output and elaborating it gives back an alpha-equivalent term.  Constructs
that extend as far right as possible (`do`, `if`, `case`, `let`, `with`,
lambdas) are parenthesized whenever more tokens follow them.  Tuples and
lists of values are printed without spaces after commas, as in `[(1,2)]`.

`pretty(t, depth=n)` elides subterms nested deeper than `n` as `...`, which
keeps long derivation traces readable; elided output is not re-parseable.
"""

from __future__ import annotations

from typing import Optional

from .syntax import (
    WILD, Absurd, App, Case, Con, Do, Handle, Handler, HandlerVal, If, Lam, Let, Lit, Op,
    PCon, PLit, PPair, PUnit, PVar, PWild, Pair, Prim, Return, Sc, Unit, Var,
)
from .types import pretty_type

_ESC = {"\n": "\\n", "\t": "\\t", "\\": "\\\\", "\0": "\\0", "\r": "\\r"}
_OPEN_ENDED = (Do, If, Case, Let, Handle)


def _quote(s: str, q: str) -> str:
    out = []
    for ch in s:
        if ch == q:
            out.append("\\" + q)
        else:
            out.append(_ESC.get(ch, ch))
    return q + "".join(out) + q


def pretty_literal(v: Lit) -> str:
    if v.kind == "Bool":
        return "true" if v.value else "false"
    if v.kind == "Char":
        return _quote(v.value, "'")
    if v.kind == "String":
        return _quote(v.value, '"')
    return str(v.value)


def _list_items(v: Con) -> Optional[list]:
    items = []
    while isinstance(v, Con) and v.name == "::":
        items.append(v.args[0])
        v = v.args[1]
    if isinstance(v, Con) and v.name == "[]":
        return items
    return None


def _tuple_items(v: Pair) -> list:
    items = [v.fst]
    while isinstance(v.snd, Pair):
        v = v.snd
        items.append(v.fst)
    items.append(v.snd)
    return items


class _Printer:
    def __init__(self, depth: Optional[int]):
        self.limit = depth

    def _deep(self, d: int) -> bool:
        return self.limit is not None and d > self.limit

    # --- patterns

    def pat(self, p, atom: bool = False) -> str:
        if isinstance(p, PVar):
            return p.name
        if isinstance(p, PWild):
            return "_"
        if isinstance(p, PUnit):
            return "()"
        if isinstance(p, PPair):
            items = [p.fst]
            q = p.snd
            while isinstance(q, PPair):
                items.append(q.fst)
                q = q.snd
            items.append(q)
            return "(" + ", ".join(self.pat(i) for i in items) + ")"
        if isinstance(p, PLit):
            return pretty_literal(Lit(p.value, p.kind))
        if isinstance(p, PCon):
            if p.name == "[]":
                return "[]"
            if p.name == "::":
                s = f"{self.pat(p.args[0], True)} :: {self.pat(p.args[1])}"
                return f"({s})" if atom else s
            if not p.args:
                return p.name
            s = " ".join([p.name] + [self.pat(a, True) for a in p.args])
            return f"({s})" if atom else s
        raise TypeError(f"not a pattern: {p!r}")

    # --- values

    def val(self, v, d: int, atom: bool = True) -> str:
        """Render a value; `atom` requests a self-delimiting rendering."""
        if self._deep(d):
            return "..."
        if isinstance(v, Unit):
            return "()"
        if isinstance(v, Var):
            return v.name
        if isinstance(v, Lit):
            s = pretty_literal(v)
            return f"({s})" if atom and s.startswith("-") else s
        if isinstance(v, Pair):
            return "(" + ",".join(self.val(i, d + 1, False) for i in _tuple_items(v)) + ")"
        if isinstance(v, Con):
            items = _list_items(v)
            if items is not None:
                return "[" + ",".join(self.val(i, d + 1, False) for i in items) + "]"
            if v.name == "::":
                s = f"{self.val(v.args[0], d + 1)} :: {self.val(v.args[1], d + 1, False)}"
            elif not v.args:
                return v.name
            else:
                s = " ".join([v.name] + [self.val(a, d + 1) for a in v.args])
            return f"({s})" if atom else s
        if isinstance(v, Lam):
            s = f"\\{self.pat(v.pat, True)}. {self.comp(v.body, d + 1, False)}"
            return f"({s})" if atom else s
        if isinstance(v, HandlerVal):
            return self.handler(v.handler, d + 1)
        raise TypeError(f"not a value: {v!r}")

    def handler(self, h: Handler, d: int) -> str:
        if self._deep(d):
            return "handler {...}"
        ann = f"[{pretty_type(h.annotation)}] " if h.annotation is not None else ""
        cls = [f"return {h.ret.var} -> {self.comp(h.ret.body, d + 1, False)}"]
        for c in h.ops:
            cls.append(f"op {c.label} {c.var} {c.kvar} -> {self.comp(c.body, d + 1, False)}")
        for c in h.scs:
            cls.append(f"sc {c.label} {c.var} {c.pvar} {c.kvar} -> "
                       f"{self.comp(c.body, d + 1, False)}")
        if h.fwd is not None:
            f = h.fwd
            cls.append(f"fwd {f.fvar} {f.pvar} {f.kvar} -> {self.comp(f.body, d + 1, False)}")
        return "handler " + ann + "{ " + ", ".join(cls) + " }"

    # --- computations

    def comp(self, c, d: int, closed: bool) -> str:
        """Render a computation; `closed` means more tokens follow it."""
        if self._deep(d):
            return "..."
        s = self._comp(c, d)
        if closed and isinstance(c, _OPEN_ENDED):
            return f"({s})"
        return s

    def _comp(self, c, d: int) -> str:
        if isinstance(c, Return):
            return f"return {self.val(c.value, d + 1)}"
        if isinstance(c, Op):
            return (f"op {c.label} {self.val(c.arg, d + 1)} "
                    f"({c.var}. {self.comp(c.body, d + 1, False)})")
        if isinstance(c, Sc):
            return (f"sc {c.label} {self.val(c.arg, d + 1)} "
                    f"({c.var}. {self.comp(c.scoped, d + 1, False)}) "
                    f"({c.kvar}. {self.comp(c.body, d + 1, False)})")
        if isinstance(c, Handle):
            return f"with {self.val(c.handler, d + 1)} handle {self.comp(c.body, d + 1, False)}"
        if isinstance(c, Do):
            stmts = []
            while isinstance(c, Do):
                first = self.comp(c.first, d + 1, True)
                stmts.append(first if c.var == WILD else f"{c.var} <- {first}")
                c = c.rest
                d += 1
            stmts.append(self.comp(c, d + 1, False))
            return "do " + "; ".join(stmts)
        if isinstance(c, App):
            return f"{self.val(c.fn, d + 1)} {self.val(c.arg, d + 1)}"
        if isinstance(c, Let):
            return f"let {c.var} = {self.val(c.value, d + 1, False)} in {self.comp(c.body, d + 1, False)}"
        if isinstance(c, If):
            return (f"if {self.val(c.cond, d + 1, False)} then {self.comp(c.then, d + 1, True)} "
                    f"else {self.comp(c.orelse, d + 1, False)}")
        if isinstance(c, Case):
            alts = []
            for i, (p, body) in enumerate(c.alts):
                last = i == len(c.alts) - 1
                alts.append(f"{self.pat(p)} -> {self.comp(body, d + 1, not last)}")
            return f"case {self.val(c.scrutinee, d + 1, False)} of " + " | ".join(alts)
        if isinstance(c, Absurd):
            return f"absurd {self.val(c.value, d + 1)}"
        if isinstance(c, Prim):
            if len(c.args) == 1:
                return f"{c.op} {self.val(c.args[0], d + 1)}"
            return f"{self.val(c.args[0], d + 1)} {c.op} {self.val(c.args[1], d + 1)}"
        raise TypeError(f"not a computation: {c!r}")


def pretty(t, depth: Optional[int] = None) -> str:
    """Surface rendering of a value, computation, handler or pattern."""
    p = _Printer(depth)
    if isinstance(t, Handler):
        return p.handler(t, 0)
    if isinstance(t, (PVar, PWild, PUnit, PPair, PCon, PLit)):
        return p.pat(t)
    if isinstance(t, (Unit, Var, Lit, Pair, Con, Lam, HandlerVal)):
        return p.val(t, 0, False)
    return p.comp(t, 0, False)
