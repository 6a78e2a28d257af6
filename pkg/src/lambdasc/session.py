"""A top-level session: the prelude plus any loaded files or REPL definitions.

The session owns the declaration tables and the schemes of every top-level
definition seen so far.  Each load parses, elaborates and type checks a
source text against that state and only commits it when there are no
diagnostics, so a failed load leaves the session unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .desugar import Elaborator, Tables, env_of
from .diagnostics import StaticError
from .evaluator import DEFAULT_FUEL, Trace, evaluate, trace
from .parser import parse_expr, parse_program
from .prelude import load_prelude
from .syntax import Return
from .typechecker import Checker, InferenceState, TypeErrorSignal
from .types import CompType, Scheme, pretty_comp, pretty_scheme


@dataclass
class LoadResult:
    schemes: dict = field(default_factory=dict)   # name -> Scheme, in source order
    comps: dict = field(default_factory=dict)     # named computation -> CompType
    main: Optional[object] = None                 # elaborated main computation
    main_type: Optional[CompType] = None
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class Session:
    def __init__(self, prelude: bool = True, prelude_path: Optional[str] = None):
        if prelude:
            pre = load_prelude(prelude_path)
            if pre.diagnostics:
                raise RuntimeError("prelude failed to check:\n"
                                   + "\n".join(d.format() for d in pre.diagnostics))
            self.tables = pre.tables.copy()
            self.schemes = dict(pre.schemes)
            self.comp_types = dict(pre.comps)
        else:
            self.tables = Tables()
            self.schemes = {}
            self.comp_types = {}

    @property
    def env(self) -> dict:
        return env_of(self.tables)

    def _checker(self, tables: Tables) -> Checker:
        ch = Checker(tables, InferenceState())
        ch.globals.update(self.schemes)
        return ch

    def load(self, src: str, file: str = "<input>") -> LoadResult:
        """Check a program; commits its definitions on success.  Raises ParseError."""
        surface = parse_program(src, file)
        el = Elaborator(self.tables)
        prog = el.elaborate(surface)
        res = self._checker(el.t).check_program(prog)
        out = LoadResult(res.schemes, res.comps, prog.main, res.main,
                         list(el.diagnostics) + res.diagnostics)
        if out.ok:
            self.tables = el.t
            self.schemes.update(res.schemes)
            self.comp_types.update(res.comps)
        return out

    def expression(self, src: str, file: str = "<input>"):
        """Elaborate an expression to a core computation.  Raises ParseError or StaticError."""
        return Elaborator(self.tables).expression(parse_expr(src, file))

    def type_of(self, c) -> object:
        """Scheme of a value computation `return v`, otherwise a computation type."""
        ch = self._checker(self.tables)
        if isinstance(c, Return):
            st = ch.st
            st.level += 1
            try:
                t = ch.infer_value({}, c.value)
            finally:
                st.level -= 1
            return ch.generalize(t, st.level)
        return ch.generalize_comp(ch.infer_closed_level(c))

    def show_type(self, src: str) -> str:
        """Printed type of an expression; raises ParseError, StaticError or TypeErrorSignal."""
        t = self.type_of(self.expression(src))
        return pretty_scheme(t) if isinstance(t, Scheme) else pretty_comp(t)

    def check_expression(self, c) -> list:
        """Diagnostics for a computation (empty when it is well typed)."""
        try:
            self.type_of(c)
        except TypeErrorSignal as ex:
            return [ex.diagnostic]
        return []

    def run(self, c, fuel: int = DEFAULT_FUEL, use_bind: bool = False):
        return evaluate(c, self.env, fuel, use_bind)

    def trace(self, c, fuel: int = DEFAULT_FUEL, use_bind: bool = False) -> Trace:
        return trace(c, self.env, fuel, use_bind)


__all__ = ["LoadResult", "Session", "StaticError"]
