"""Property harness for the metatheory: generated programs and their checks.

`gen_well_typed` builds a closed computation type-first: it picks a target
value type and an effect row, then a term constructor that can produce that
type, recursing on the pieces.  Handlers come from the prelude plus a few
generated bind-style handlers whose `fwd` clause is produced by the bind
desugaring.

Each generated term is run through four checks:

* subject reduction: every term along the trace still has the original type
  (the original row tail is held rigid, later rows may only shrink);
* progress: evaluation never gets stuck, and an unhandled operation at the
  top is one the original type allows;
* the nondeterminism oracle, for terms whose row only mentions choose/fail;
* bind/fwd coherence, for terms that mention a handler written with `bind`.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .evaluator import FuelExhausted, NormalOp, NormalReturn, NormalSc, Stuck, evaluate, trace
from .pretty import pretty
from .session import Session
from .syntax import (
    Absurd, App, Case, Con, Do, Handle, HandlerVal, If, Lam, Let, Lit, Op, PCon, PVar, Pair,
    Prim, Return, Sc, Unit, Var, alpha_eq, subst,
)
from .typechecker import Checker, InferenceState, TypeErrorSignal
from .types import CompType

DEFAULT_LABELS = ("choose", "fail", "get", "inc", "raise", "ask", "once", "catch", "local",
                  "depth")
DEFAULT_HANDLERS = ("h_ND", "h_once", "h_get", "h_inc", "h_inc_x", "h_except", "h_except_x",
                    "h_read", "h_depth", "gen_nd", "gen_get", "gen_except", "gen_state")
NONDET_LABELS = frozenset({"choose", "fail"})

# How each handler family is used: (handled labels, result shape).
#   list:   with h handle c            : List X
#   id:     with h handle c            : X
#   except: with h handle c            : String + X
#   state:  do f <- with h handle c; f n : (X, Int)
#   reader: do f <- with h handle c; f n : X
#   depth:  do f <- with h handle c; f n : List (X, Int)
HANDLER_SHAPES = {
    "h_ND": ("list", {"choose", "fail"}),
    "h_once": ("list", {"choose", "once"}),
    "h_get": ("id", {"get"}),
    "h_inc": ("state", {"inc"}),
    "h_inc_x": ("state", {"inc"}),
    "h_except": ("except", {"raise", "catch"}),
    "h_except_x": ("except", {"raise"}),
    "h_read": ("reader", {"ask", "local"}),
    "h_depth": ("depth", {"choose", "fail", "depth"}),
    "gen_nd": ("list", {"choose", "fail"}),
    "gen_get": ("id", {"get"}),
    "gen_except": ("except", {"raise"}),
    "gen_state": ("state", {"inc"}),
}

# Bind-style handler templates, instantiated with generated constants.
_TEMPLATES = {
    "gen_nd": ("handler [fun a -> List a] {{ return x -> return [x], "
               "op choose _ k -> do xs <- k {b1}; ys <- k {b2}; xs ++ ys, "
               "op fail _ _ -> return [], bind x k -> concatMap x k }}"),
    "gen_get": ("handler [fun a -> a] {{ return x -> return x, op get _ k -> k {n}, "
                "bind x k -> k x }}"),
    "gen_except": ("handler [fun a -> String + a] {{ return x -> right x, "
                   "op raise e _ -> left e, bind x k -> exceptMap x k }}"),
    "gen_state": ("handler [fun a -> Int ->^mu (a, Int)] {{ "
                  "return x -> return (\\s. return (x, s)), "
                  "op inc _ k -> return (\\s. do s' <- s + {n}; k' <- k s'; k' s'), "
                  "bind x k -> return (\\s. do (y, s') <- x s; k' <- k y; k' s') }}"),
}
_BIND_PRELUDE = {"h_ND", "h_once", "h_get", "h_except", "h_except_x", "h_inc_x"}

INT, BOOL, UNIT = ("Int",), ("Bool",), ("Unit",)


class OracleScope(Exception):
    """The oracle was asked about a computation using effects beyond choose/fail."""


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    depth: int = 6
    labels: tuple = DEFAULT_LABELS
    handlers: tuple = DEFAULT_HANDLERS
    fuel: int = 50_000


@dataclass
class Report:
    seed: int
    total: int = 0
    failures: list = field(default_factory=list)   # of {term, stage, detail}
    fuel_discards: int = 0
    oracle_checked: int = 0
    coherence_checked: int = 0
    census: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {"seed": self.seed, "total": self.total, "failures": self.failures,
                "fuel_discards": self.fuel_discards}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


_SESSION: Optional[Session] = None


def default_session() -> Session:
    global _SESSION
    if _SESSION is None:
        _SESSION = Session()
    return _SESSION


# --------------------------------------------------------------------------
# generation


class _Gen:
    def __init__(self, cfg: GenConfig, session: Session):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.session = session
        self.counter = 0
        self.labels = [l for l in cfg.labels if l in session.tables.effects]
        self.handlers = [h for h in cfg.handlers if h in HANDLER_SHAPES]

    def fresh(self, base: str = "v") -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    # types

    def gen_type(self, d: int = 2):
        r = self.rng.random()
        if d <= 0 or r < 0.55:
            return self.rng.choice([INT, INT, BOOL, UNIT])
        if r < 0.75:
            return ("Pair", self.gen_type(d - 1), self.gen_type(d - 1))
        if r < 0.9:
            return ("List", self.gen_type(d - 1))
        return ("Sum", self.gen_type(d - 1))

    # values

    def gen_val(self, t, scope: list, d: int = 2):
        vars_ = [n for n, ty in scope if ty == t]
        if vars_ and self.rng.random() < 0.5:
            return Var(self.rng.choice(vars_))
        if t == INT:
            return Lit(self.rng.randint(-2, 9), "Int")
        if t == BOOL:
            return Lit(self.rng.random() < 0.5, "Bool")
        if t == UNIT:
            return Unit()
        if t[0] == "Pair":
            return Pair(self.gen_val(t[1], scope, d - 1), self.gen_val(t[2], scope, d - 1))
        if t[0] == "List":
            n = 0 if d <= 0 else self.rng.randint(0, 2)
            v = Con("[]")
            for _ in range(n):
                v = Con("::", (self.gen_val(t[1], scope, d - 1), v))
            return v
        if t[0] == "Sum":
            if self.rng.random() < 0.3:
                return Con("left", (Lit(self.rng.choice(["e", "f"]), "String"),))
            return Con("right", (self.gen_val(t[1], scope, d - 1),))
        raise AssertionError(t)

    # handlers

    def handler_value(self, name: str):
        if name in _TEMPLATES:
            src = _TEMPLATES[name].format(b1=self.rng.choice(["true", "false"]),
                                          b2=self.rng.choice(["true", "false"]),
                                          n=self.rng.randint(1, 3))
            c = self.session.expression(src)
            assert isinstance(c, Return) and isinstance(c.value, HandlerVal)
            return c.value
        return Var(name)

    # computations

    def gen_comp(self, t, row: frozenset, scope: list, d: int):
        if d <= 0:
            return Return(self.gen_val(t, scope))
        opts = [self._ret, self._do, self._let, self._if, self._app]
        if t in (INT, BOOL) or (t[0] == "List"):
            opts.append(self._prim)
        if any(ty == ("List", INT) for _, ty in scope):
            opts.append(self._case)
        for l in sorted(row):
            opts.extend(self._effect_builders(l) * 2)
        if d >= 2:
            opts.extend([self._handle] * (4 if d >= 3 else 2))
        while True:
            c = self.rng.choice(opts)(t, row, scope, d)
            if c is not None:
                return c

    def _ret(self, t, row, scope, d):
        return Return(self.gen_val(t, scope))

    def _do(self, t, row, scope, d):
        t1 = self.gen_type(1)
        x = self.fresh()
        return Do(x, self.gen_comp(t1, row, scope, d - 1),
                  self.gen_comp(t, row, scope + [(x, t1)], d - 1))

    def _let(self, t, row, scope, d):
        t1 = self.gen_type(1)
        x = self.fresh()
        return Let(x, self.gen_val(t1, scope), self.gen_comp(t, row, scope + [(x, t1)], d - 1))

    def _if(self, t, row, scope, d):
        return If(self.gen_val(BOOL, scope), self.gen_comp(t, row, scope, d - 1),
                  self.gen_comp(t, row, scope, d - 1))

    def _app(self, t, row, scope, d):
        t1 = self.gen_type(1)
        x = self.fresh()
        return App(Lam(PVar(x), self.gen_comp(t, row, scope + [(x, t1)], d - 1)),
                   self.gen_val(t1, scope))

    def _prim(self, t, row, scope, d):
        if t == INT:
            op = self.rng.choice(["+", "-", "*"])
            return Prim(op, (self.gen_val(INT, scope), self.gen_val(INT, scope)))
        if t == BOOL:
            op = self.rng.choice(["<", ">", "=", "<=", ">="])
            return Prim(op, (self.gen_val(INT, scope), self.gen_val(INT, scope)))
        return Prim("++", (self.gen_val(t, scope), self.gen_val(t, scope)))

    def _case(self, t, row, scope, d):
        lst = self.rng.choice([n for n, ty in scope if ty == ("List", INT)])
        h, tl = self.fresh(), self.fresh()
        return Case(Var(lst), (
            (PCon("[]"), self.gen_comp(t, row, scope, d - 1)),
            (PCon("::", (PVar(h), PVar(tl))),
             self.gen_comp(t, row, scope + [(h, INT), (tl, ("List", INT))], d - 1)),
        ))

    def _effect_builders(self, label: str) -> list:
        def op_result(res_t, arg):
            def build(t, row, scope, d):
                x = self.fresh()
                return Op(label, arg(scope), x, self.gen_comp(t, row, scope + [(x, res_t)], d - 1))
            return build

        def op_abort(arg):
            def build(t, row, scope, d):
                x = self.fresh()
                return Op(label, arg(scope), x, Absurd(Var(x)))
            return build

        def scoped(arg, ytype):
            def build(t, row, scope, d):
                t1 = self.gen_type(1)
                y, z = self.fresh(), self.fresh()
                return Sc(label, arg(scope), y, self.gen_comp(t1, row, scope + [(y, ytype)], d - 1),
                          z, self.gen_comp(t, row, scope + [(z, t1)], d - 1))
            return build

        unit = lambda scope: Unit()  # noqa: E731
        if label == "choose":
            return [op_result(BOOL, unit)] * 2
        if label in ("get", "inc", "ask"):
            return [op_result(INT, unit)]
        if label == "fail":
            return [op_abort(unit)]
        if label == "raise":
            return [op_abort(lambda scope: Lit(self.rng.choice(["e", "f"]), "String"))]
        if label == "once":
            return [scoped(unit, UNIT)] * 2
        if label == "catch":
            return [scoped(lambda scope: Lit(self.rng.choice(["e", "f"]), "String"), BOOL)]
        if label == "local":
            def fn(scope):
                a = self.fresh("a")
                return Lam(PVar(a), Prim("+", (Var(a), Lit(self.rng.randint(1, 3), "Int"))))
            return [scoped(fn, UNIT)]
        if label == "depth":
            return [scoped(lambda scope: Lit(self.rng.randint(0, 3), "Int"), UNIT)]
        return []

    def _handle(self, t, row, scope, d):
        fits = []
        for h in self.handlers:
            shape, labels = HANDLER_SHAPES[h]
            if shape in ("id", "reader"):
                fits.append((h, t))
            elif shape == "list" and t[0] == "List":
                fits.append((h, t[1]))
            elif shape == "except" and t[0] == "Sum":
                fits.append((h, t[1]))
            elif shape == "state" and t[0] == "Pair" and t[2] == INT:
                fits.append((h, t[1]))
            elif shape == "depth" and t[0] == "List" and t[1][0] == "Pair" and t[1][2] == INT:
                fits.append((h, t[1][1]))
        if not fits:
            return None
        h, inner = self.rng.choice(fits)
        shape, labels = HANDLER_SHAPES[h]
        inner_row = row | frozenset(l for l in labels if l in self.session.tables.effects)
        body = self.gen_comp(inner, inner_row, scope, d - 1)
        hv = self.handler_value(h)
        if shape in ("state", "reader", "depth"):
            f = self.fresh("f")
            return Do(f, Handle(hv, body), App(Var(f), self.gen_val(INT, scope)))
        return Handle(hv, body)


def gen_well_typed(cfg: GenConfig, session: Optional[Session] = None, retries: int = 5):
    """A closed, well-typed computation; deterministic in `cfg`.

    On a (not expected) type error the depth is decremented and generation
    retried; after `retries` failures a RuntimeError is raised.
    """
    session = session or default_session()
    depth = cfg.depth
    last = None
    for attempt in range(retries):
        g = _Gen(GenConfig(cfg.seed * 7919 + attempt, depth, cfg.labels, cfg.handlers,
                           cfg.fuel), session)
        if depth <= 0:
            return Return(g.gen_val(g.gen_type(), []))
        labels = [l for l in g.labels if g.rng.random() < 0.05]
        c = g.gen_comp(g.gen_type(), frozenset(labels), [], depth)
        try:
            session.type_of(c)
            return c
        except TypeErrorSignal as ex:
            last = ex.diagnostic
            depth -= 1
    raise RuntimeError(f"generation retries exhausted: {last.format() if last else ''}")


def census(c) -> dict:
    """Counts of Handle, Sc and Op nodes in a term."""
    out = {"Handle": 0, "Sc": 0, "Op": 0}

    def walk(t):
        name = type(t).__name__
        if name in out:
            out[name] += 1
        for v in getattr(t, "__dict__", {}).values():
            if isinstance(v, tuple):
                for x in v:
                    walk(x)
            elif hasattr(v, "__dict__"):
                walk(v)
    walk(c)
    return out


# --------------------------------------------------------------------------
# checks


def _rigid_type(session: Session, c) -> CompType:
    """The type of `c` with its open variables named (and so held rigid)."""
    ch = Checker(session.tables, InferenceState())
    ch.globals.update(session.schemes)
    return ch.generalize_comp(ch.infer_closed_level(c))


def _preserves(session: Session, c, expected: CompType) -> Optional[str]:
    ch = Checker(session.tables, InferenceState())
    ch.globals.update(session.schemes)
    try:
        got = ch.infer_closed_level(c)
        ch.unify(got.value, expected.value)
        ch.unify_row(got.row, expected.row)
    except TypeErrorSignal as ex:
        return ex.diagnostic.format()
    return None


def check_subject_reduction(c, session: Optional[Session] = None,
                            fuel: int = 50_000) -> dict:
    """Re-type every step of the trace of `c` against the type of `c`."""
    session = session or default_session()
    expected = _rigid_type(session, c)
    tr = trace(c, session.env, fuel)
    report = {"ok": True, "steps": len(tr.steps), "type": str(expected), "violation": None,
              "fuel_exhausted": isinstance(tr.final, FuelExhausted)}
    prev = c
    for i, (rule, term) in enumerate(tr.steps):
        err = _preserves(session, term, expected)
        if err is not None:
            report.update(ok=False, violation={
                "step": i + 1, "rule": rule, "before": pretty(prev, depth=12),
                "after": pretty(term, depth=12), "detail": err})
            break
        prev = term
    return report


def check_progress(c, session: Optional[Session] = None, fuel: int = 50_000) -> dict:
    """Evaluation reaches a normal form whose unhandled head the type allows."""
    session = session or default_session()
    ct = _rigid_type(session, c)
    r = evaluate(c, session.env, fuel)
    report = {"ok": True, "result": type(r).__name__, "detail": None}
    if isinstance(r, Stuck):
        report.update(ok=False, detail=r.reason)
    elif isinstance(r, (NormalOp, NormalSc)) and r.label not in ct.row.labels:
        report.update(ok=False, detail=f"unhandled {r.label} not in the row of {ct}")
    return report


def oracle_nondet(c, session: Optional[Session] = None, fuel: int = 50_000) -> list:
    """All results of `c`, exploring both answers of every choose depth-first.

    Only the semantics of choose and fail is assumed: a failure contributes
    nothing, and both branches of a choice are explored, true first.
    """
    session = session or default_session()
    ct = _rigid_type(session, c)
    extra = set(ct.row.labels) - NONDET_LABELS
    if extra:
        raise OracleScope(f"uses effects beyond choose/fail: {sorted(extra)}")
    out: list = []
    pending = [c]
    while pending:
        t = pending.pop()
        r = evaluate(t, session.env, fuel)
        if isinstance(r, NormalReturn):
            out.append(r.value)
        elif isinstance(r, NormalOp) and r.label == "fail":
            continue
        elif isinstance(r, NormalOp) and r.label == "choose":
            pending.append(subst(r.body, {r.var: Lit(False, "Bool")}))
            pending.append(subst(r.body, {r.var: Lit(True, "Bool")}))
        elif isinstance(r, (NormalOp, NormalSc)):
            raise OracleScope(f"unexpected operation {r.label}")
        else:
            raise OracleScope(f"evaluation ended with {type(r).__name__}")
    return out


def _as_list(v) -> Optional[list]:
    items = []
    while isinstance(v, Con) and v.name == "::":
        items.append(v.args[0])
        v = v.args[1]
    return items if isinstance(v, Con) and v.name == "[]" else None


def _mentions_bind_handler(c) -> bool:
    found = False

    def walk(t):
        nonlocal found
        if found:
            return
        if isinstance(t, Var) and t.name in _BIND_PRELUDE:
            found = True
        elif isinstance(t, HandlerVal) and t.handler.bind is not None:
            found = True
            return
        for v in getattr(t, "__dict__", {}).values():
            if isinstance(v, tuple):
                for x in v:
                    walk(x)
            elif hasattr(v, "__dict__"):
                walk(v)
    walk(c)
    return found


def _same_outcome(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, NormalReturn):
        return alpha_eq(a.value, b.value)
    if isinstance(a, (NormalOp, NormalSc)):
        return a.label == b.label and alpha_eq(a.arg, b.arg)
    return isinstance(a, FuelExhausted)


def check_coherence(c, session: Optional[Session] = None, fuel: int = 50_000) -> dict:
    """Bind handlers give the same outcome via their fwd desugaring and via E-Bind."""
    session = session or default_session()
    via_fwd = evaluate(c, session.env, fuel)
    via_bind = evaluate(c, session.env, fuel, use_bind=True)
    ok = _same_outcome(via_fwd, via_bind)
    return {"ok": ok, "fwd": type(via_fwd).__name__, "bind": type(via_bind).__name__,
            "detail": None if ok else
            f"fwd gave {_show(via_fwd)} but bind gave {_show(via_bind)}"}


def _show(r) -> str:
    if isinstance(r, NormalReturn):
        return pretty(Return(r.value), depth=12)
    if isinstance(r, (NormalOp, NormalSc)):
        return f"unhandled {r.label}"
    return type(r).__name__


def check_term(c, session: Session, fuel: int, report: Report) -> None:
    term = pretty(c, depth=12)

    def fail(stage: str, detail: str):
        report.failures.append({"term": term, "stage": stage, "detail": detail})

    final = evaluate(c, session.env, fuel)
    if isinstance(final, FuelExhausted):
        report.fuel_discards += 1
        return
    sr = check_subject_reduction(c, session, fuel)
    if not sr["ok"]:
        fail("subject_reduction", json.dumps(sr["violation"]))
    pr = check_progress(c, session, fuel)
    if not pr["ok"]:
        fail("progress", pr["detail"])
    try:
        expected = oracle_nondet(c, session, fuel)
    except OracleScope:
        expected = None
    if expected is not None:
        report.oracle_checked += 1
        got = evaluate(Handle(Var("h_ND"), c), session.env, fuel)
        items = _as_list(got.value) if isinstance(got, NormalReturn) else None
        if items is None or len(items) != len(expected) or \
                not all(alpha_eq(a, b) for a, b in zip(items, expected)):
            fail("oracle_nondet", f"oracle {[pretty(v) for v in expected]} but h_ND gave "
                                  f"{_show(got)}")
    if _mentions_bind_handler(c):
        report.coherence_checked += 1
        co = check_coherence(c, session, fuel)
        if not co["ok"]:
            fail("coherence", co["detail"])


def run_conformance(seed: int = 0, count: int = 1000, depth: int = 6,
                    fuel: int = 50_000, session: Optional[Session] = None,
                    labels: tuple = DEFAULT_LABELS,
                    handlers: tuple = DEFAULT_HANDLERS) -> Report:
    """Generate `count` terms from `seed` and run every check on each."""
    session = session or default_session()
    report = Report(seed)
    start = time.perf_counter()
    totals = {"Handle": 0, "Sc": 0, "Op": 0}
    for i in range(count):
        cfg = GenConfig(seed * 1_000_003 + i, depth, labels, handlers, fuel)
        try:
            c = gen_well_typed(cfg, session)
        except RuntimeError as ex:
            report.failures.append({"term": None, "stage": "generate", "detail": str(ex)})
            continue
        for k, v in census(c).items():
            totals[k] += v
        report.total += 1
        check_term(c, session, fuel, report)
    if report.fuel_discards * 100 > max(report.total, 1):
        report.failures.append({"term": None, "stage": "fuel", "detail":
                                f"{report.fuel_discards} of {report.total} terms ran out of fuel "
                                f"(at most 1% may)"})
    report.census = totals
    report.seconds = time.perf_counter() - start
    return report
