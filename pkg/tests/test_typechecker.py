import json

import pytest
from hypothesis import given, settings, strategies as st

from lambdasc.diagnostics import Diagnostic
from lambdasc.parser import SourceSpan as Span
from lambdasc.prelude import load_prelude
from lambdasc.syntax import Lam, PVar, Return, Var
from lambdasc.typechecker import (
    Checker, InferenceState, TypeErrorSignal, _metas, check_handler, generalize,
    infer_computation, infer_value, unify_row, unify_value,
)
from lambdasc.types import (
    BOOL, INT, CompType, RMeta, RVar, Row, Scheme, TApp, TFun, TLam, TVar, TermBinding,
    TyVarEntry, TypeContext, list_of, pretty_scheme, row_equiv, type_equiv,
)

from oracles import row_unifiers


def parse_scheme(src: str) -> Scheme:
    from lambdasc.desugar import Elaborator
    from lambdasc.parser import parse_type
    return Elaborator(load_prelude().tables).resolve_scheme(parse_type(src))


def load_errors(session, src: str) -> list:
    return [d.kind for d in session.load(src, "t.lsc").diagnostics]


# --- unify_value ----------------------------------------------------------

def test_unify_meta_with_bool():
    s = InferenceState()
    a = s.fresh_meta()
    unify_value(a, BOOL, s)
    assert s.zonk(a) == BOOL


def test_unify_reduces_type_operator_application_first():
    s = InferenceState()
    g = s.fresh_meta()
    unify_value(TApp(TLam("b", list_of(TVar("b"))), INT), list_of(g), s)
    assert s.zonk(g) == INT


def test_unify_mismatch_and_occurs_check():
    s = InferenceState()
    with pytest.raises(TypeErrorSignal) as ex:
        unify_value(INT, BOOL, s)
    assert ex.value.diagnostic.kind == "TypeMismatch"
    a = s.fresh_meta()
    with pytest.raises(TypeErrorSignal) as ex:
        unify_value(a, list_of(a), s)
    assert ex.value.diagnostic.kind == "OccursCheck"


def test_mismatch_renders_both_sides_after_substitution():
    s = InferenceState()
    a = s.fresh_meta()
    unify_value(a, INT, s)
    with pytest.raises(TypeErrorSignal) as ex:
        unify_value(list_of(a), list_of(BOOL), s)
    d = ex.value.diagnostic
    assert (d.expected, d.actual) == ("Int", "Bool")


def test_scoped_result_type_is_the_continuation_parameter(session):
    t = session.show_type("sc once () (_. op choose () (b. return b)) "
                          "(z. if z then return 1 else return 2)")
    assert t == "Int!<choose; once; mu>"
    with pytest.raises(TypeErrorSignal):
        session.show_type("sc once () (_. op choose () (b. return b)) (z. z + 1)")


# --- unify_row ------------------------------------------------------------

def test_open_row_absorbs_surplus_label():
    s = InferenceState()
    e = s.fresh_row(("choose",))
    unify_row(e, Row(("once", "choose")), s)
    assert s.zonk(Row((), e.tail)) == Row(("once",))
    assert row_unifiers(Row(("choose",), RVar("m1")), Row(("once", "choose"))) == [{"m1": ("once",)}]


def test_empty_rows_unify_without_binding():
    s = InferenceState()
    unify_row(Row(()), Row(()), s)
    assert s.rsub == {} and s.tsub == {}


def test_distinct_closed_singletons_do_not_unify():
    with pytest.raises(TypeErrorSignal) as ex:
        unify_row(Row(("choose",)), Row(("once",)), InferenceState())
    assert ex.value.diagnostic.kind == "RowMismatch"


def test_row_occurs_check():
    s = InferenceState()
    r = s.fresh_row()
    with pytest.raises(TypeErrorSignal) as ex:
        unify_row(Row(("choose",), r.tail), r, s)
    assert ex.value.diagnostic.kind == "OccursCheck"


ROWS = st.tuples(st.lists(st.sampled_from(["choose", "once"]), max_size=2),
                 st.sampled_from([None, "m1", "m2"]))


def _assert_idempotent(s: InferenceState) -> None:
    for i, t in list(s.tsub.items()):
        z = s.zonk(t)
        assert s.zonk(z) == z
        tm, rm, sk = set(), set(), set()
        _metas(z, tm, rm, sk)
        assert i not in tm
    for i, r in list(s.rsub.items()):
        z = s.zonk(r)
        assert s.zonk(z) == z
        assert z.tail != RMeta(i)


@settings(max_examples=300, deadline=None)
@given(ROWS, ROWS)
def test_row_unification_agrees_with_bounded_search(a, b):
    s = InferenceState()
    metas = {n: s.fresh_row().tail for n in ("m1", "m2")}

    def mk(labels, tail, meta: bool):
        if tail is None:
            return Row(tuple(labels))
        return Row(tuple(labels), metas[tail] if meta else RVar(tail))

    sols = row_unifiers(mk(*a, False), mk(*b, False))
    e, f = mk(*a, True), mk(*b, True)
    try:
        unify_row(e, f, s)
    except TypeErrorSignal:
        assert sols == []
        return
    assert sols != []
    ze, zf = s.zonk(e), s.zonk(f)
    named = lambda r: Row(r.labels, RVar(f"v{r.tail.id}") if isinstance(r.tail, RMeta) else r.tail)
    assert row_equiv(named(ze), named(zf))
    _assert_idempotent(s)


# --- infer_value / infer_computation / generalize ----------------------------

def test_identity_scheme():
    s = InferenceState()
    s.level += 1
    t = infer_value(None, Lam(PVar("x"), Return(Var("x"))), s)
    s.level -= 1
    assert pretty_scheme(generalize(None, t, s)) == "forall a mu. a -> a!<mu>"


def test_variable_instantiates_fresh():
    sc = Scheme(("a",), (), TFun(TVar("a"), CompType(TVar("a"), Row(()))))
    g = TypeContext().extend(TermBinding("x", sc))
    s = InferenceState()
    t1 = infer_value(g, Var("x"), s)
    t2 = infer_value(g, Var("x"), s)
    assert t1 != t2
    assert isinstance(t1.arg, type(s.fresh_meta())) and t1.res == CompType(t1.arg, Row(()))


def test_unknown_variable():
    with pytest.raises(TypeErrorSignal) as ex:
        infer_value(None, Var("nowhere"), InferenceState())
    assert ex.value.diagnostic.kind == "UnboundVar"


@pytest.mark.parametrize("src,want", [
    ("c_once", "(Bool, Bool)!<choose; once; mu>"),
    ("return ()", "()"),
    ('op raise "e" (y. absurd y)', "a!<raise; mu>"),
])
def test_computation_types(session, src, want):
    assert session.show_type(src) == want


def test_return_unit_has_fresh_open_row(session):
    s = InferenceState()
    ct = infer_computation(None, session.expression("return ()"), s)
    assert isinstance(ct.row.tail, RMeta) and ct.row.labels == ()


def test_generalize_empty_context():
    s = InferenceState()
    a, r = s.fresh_meta(), s.fresh_row()
    sc = generalize(None, TFun(a, CompType(a, r)), s)
    assert len(sc.tvars) == 1 and len(sc.rvars) == 1


def test_generalize_skips_context_variables():
    g = TypeContext().extend(TyVarEntry("a"))
    sc = generalize(g, TFun(TVar("a"), CompType(BOOL, Row(()))), InferenceState())
    assert sc.tvars == ()
    s = InferenceState()
    m = s.fresh_meta()
    g2 = TypeContext().extend(TermBinding("y", Scheme((), (), m)))
    assert generalize(g2, TFun(m, CompType(BOOL, Row(()))), s).tvars == ()


@pytest.mark.parametrize("name,want", [
    ("h_except", "forall a mu. a!<raise; catch; mu> => Sum String a!<mu>"),
    ("h_cut", "forall a mu. a!<choose; fail; cut; call; mu> => CutList a!<mu>"),
])
def test_prelude_handler_generalization(session, name, want):
    assert type_equiv(session.schemes[name], parse_scheme(want))


# --- check_handler --------------------------------------------------------

@pytest.mark.parametrize("src,want", [
    ("h_once", "forall a mu. a!<choose; once; mu> => List a!<mu>"),
    ("h_read", "forall a mu. a!<ask; local; mu> => (Int ->^mu a)!<mu>"),
    ("handler {return x -> return x, fwd f p k -> f (p, k)}", "forall a mu. a!<mu> => a!<mu>"),
])
def test_handler_types(session, src, want):
    assert type_equiv(session.type_of(session.expression(src)), parse_scheme(want))


def test_check_handler_entry_point(session):
    c = session.expression("h_once")
    s = InferenceState()
    h = c.value if isinstance(c, Return) else None
    if isinstance(h, Var):
        h = session.env[h.name]
    g = TypeContext().extend(TermBinding("concatMap", session.schemes["concatMap"]))
    t = check_handler(g, h.handler, s, session.tables)
    assert type_equiv(generalize(None, t, s),
                      parse_scheme("forall a mu. a!<choose; once; mu> => List a!<mu>"))


# --- program-level diagnostics ----------------------------------------------

@pytest.mark.parametrize("src,kind", [
    ("f = \\x. op nope x (y. return y)", "UnknownLabel"),
    ("g = \\x. return y", "UnboundVar"),
    ("h = \\x. x x", "OccursCheck"),
    ("k = handler {return x -> return x}", "MissingFwd"),
    ("m = \\b. case b of true -> return 1", "NonExhaustiveCase"),
    ("n = handler {op once _ k -> k (), fwd f p k -> f (p, k)}", "LabelFlavorMismatch"),
    ("n = \\x. op once () (y. return y)", "LabelFlavorMismatch"),
    ("r = handler [Int] {return x -> return x, fwd f p k -> f (p, k)}", "AnnotationArity"),
    ("bad = \\x. return (x + true)", "TypeMismatch"),
    ("z = handler {return x -> return x, fwd f p k -> f (p, k), bind x k -> k x}",
     "BothBindAndFwd"),
])
def test_error_kinds(src, kind):
    from lambdasc.session import Session
    assert load_errors(Session(), src) == [kind]


def test_monomorphic_carrier_rejects_scoped_result():
    from lambdasc.session import Session
    src = ("q = handler [fun a -> (Bool, Bool)] {return x -> return (true, true), "
           "sc once _ p k -> do xs <- p (); k xs, fwd f p k -> f (p, k)}")
    res = Session().load(src, "t.lsc")
    (d,) = res.diagnostics
    assert d.kind == "TypeMismatch"
    assert d.actual == "(Bool, Bool)"


def test_checking_continues_past_failing_definition():
    from lambdasc.session import Session
    res = Session().load("bad = \\x. return (x + true)\ngood = \\x. return (x + 1)", "t.lsc")
    assert [d.kind for d in res.diagnostics] == ["TypeMismatch"]
    assert pretty_scheme(res.schemes["good"]) == "forall mu. Int -> Int!<mu>"


def test_failed_load_leaves_session_unchanged():
    from lambdasc.session import Session
    s = Session()
    before = dict(s.schemes)
    s.load("good = \\x. return x\nbad = \\x. return y", "t.lsc")
    assert s.schemes == before


def test_annotation_is_checked():
    from lambdasc.session import Session
    s = Session()
    assert load_errors(s, "f : Int -> Int!<>\nf x = return true") == ["TypeMismatch"]
    assert load_errors(s, "g : forall a. a -> a!<>\ng x = return x") == []


def test_diagnostic_formats():
    d = Diagnostic("RowMismatch", Span("t.lsc", 3, 7, 3, 9), "<choose>", "<once>", "why")
    assert d.format() == "t.lsc:3:7: RowMismatch: expected <choose> but found <once> (why)"
    j = json.loads(json.dumps(d.to_json()))
    assert j["kind"] == "RowMismatch" and j["span"]["line"] == 3 and j["expected"] == "<choose>"


# --- stability ------------------------------------------------------------

def test_inferring_twice_gives_equivalent_schemes():
    pre = load_prelude()
    first = Checker(pre.tables, InferenceState()).check_program(pre.program)
    second = Checker(pre.tables, InferenceState()).check_program(pre.program)
    assert first.diagnostics == second.diagnostics == []
    for name, sc in first.schemes.items():
        assert type_equiv(sc, second.schemes[name]), name
        assert type_equiv(sc, pre.schemes[name]), name
