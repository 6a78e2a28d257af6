import pytest
from hypothesis import given, settings, strategies as st

from lambdasc.desugar import Elaborator
from lambdasc.parser import parse_expr
from lambdasc.pretty import pretty
from lambdasc.syntax import (
    App, BindClause, BothBindAndFwd, Do, FwdClause, Handler, HandlerVal, Lam, Let, Lit, Op,
    PVar, Pair, RetClause, Return, Sc, Unit, Var, alpha_eq, desugar_bind, free_vars,
    is_value, substitute,
)

from oracles import brute_free_vars


def core(src: str):
    return Elaborator().expression(parse_expr(src))


# --- substitution -------------------------------------------------------------

def test_substitute_replaces_free_occurrence():
    assert substitute(Return(Var("x")), "x", Unit()) == Return(Unit())


def test_substitute_avoids_capture():
    got = substitute(Return(Lam(PVar("y"), Return(Var("x")))), "x", Var("y"))
    lam = got.value
    assert lam.pat.name != "y"
    assert lam.body == Return(Var("y"))


def test_substitute_in_c_nd2_body():
    c = Do("p", Return(Var("b")),
           Op("choose", Unit(), "q", Return(Pair(Var("p"), Var("q")))))
    expected = Do("p", Return(Lit(True, "Bool")),
                  Op("choose", Unit(), "q", Return(Pair(Var("p"), Var("q")))))
    assert substitute(c, "b", Lit(True, "Bool")) == expected


def test_substitute_stops_at_shadowing_binder():
    c = Do("x", Return(Var("x")), Return(Var("x")))
    assert substitute(c, "x", Unit()) == Do("x", Return(Unit()), Return(Var("x")))


# --- free variables -------------------------------------------------------------

def test_free_vars_examples():
    assert free_vars(Lam(PVar("x"), Return(Var("x")))) == set()
    assert free_vars(Do("x", Return(Var("y")), Return(Pair(Var("x"), Var("z"))))) == {"y", "z"}


def test_free_vars_of_handler_subtracts_clause_binders():
    h = core("handler [fun a -> List a] { return x -> return [x], "
             "op choose _ k -> do xs <- k true; ys <- k false; xs ++ ys, "
             "bind x k -> concatMap x k }")
    assert free_vars(h.value) == {"concatMap"} == brute_free_vars(h.value)


# --- alpha equivalence ----------------------------------------------------------

def test_alpha_eq_renames_binders():
    assert alpha_eq(Lam(PVar("x"), Return(Var("x"))), Lam(PVar("y"), Return(Var("y"))))
    assert not alpha_eq(Lam(PVar("x"), Return(Var("z"))), Lam(PVar("y"), Return(Var("y"))))


def test_sc_binders_are_distinct_scopes():
    a = Sc("once", Unit(), "y", Return(Var("y")), "z", Return(Var("z")))
    b = Sc("once", Unit(), "u", Return(Var("u")), "v", Return(Var("v")))
    assert alpha_eq(a, b)


# --- bind desugaring ------------------------------------------------------------

def _bind_handler(body):
    return Handler(None, RetClause("x", Return(Var("x"))), (), (), None,
                   BindClause("x", "k", body))


def test_desugar_bind_builds_fwd_clause():
    h = desugar_bind(_bind_handler(App(App_fn := Var("concatMap"), Var("x"))))
    f = h.fwd
    expected = App(Var(f.fvar), Pair(Var(f.pvar), Lam(PVar("x"), App(App_fn, Var("x")))))
    assert f.kvar == "k" and alpha_eq(f.body, expected)


def test_desugar_bind_from_source_matches_printed_equation():
    h = core("handler [fun a -> String + a] { return x -> right x, op raise e _ -> left e, "
             "bind x k -> exceptMap x k }").value.handler
    want = core("handler [fun a -> String + a] { return x -> right x, op raise e _ -> left e, "
                "fwd f p k -> f (p, \\x. exceptMap x k) }").value.handler
    assert alpha_eq(HandlerVal(h), HandlerVal(want))


def test_desugar_bind_is_identity_on_fwd_handlers():
    h = Handler(None, RetClause("x", Return(Var("x"))), (), (),
                FwdClause("f", "p", "k", App(Var("f"), Pair(Var("p"), Var("k")))))
    assert desugar_bind(h) is h


def test_desugar_bind_is_idempotent():
    h = desugar_bind(_bind_handler(App(Var("k"), Var("x"))))
    assert desugar_bind(h) is h


def test_both_bind_and_fwd_rejected():
    h = Handler(None, RetClause("x", Return(Var("x"))), (), (),
                FwdClause("f", "p", "k", App(Var("f"), Pair(Var("p"), Var("k")))),
                BindClause("x", "k", App(Var("k"), Var("x"))))
    with pytest.raises(BothBindAndFwd):
        desugar_bind(h)


def test_is_value():
    assert is_value(Unit()) and not is_value(Return(Unit()))


# --- generated terms --------------------------------------------------------------

names = st.sampled_from(["x", "y", "z"])


def values(depth):
    leaves = st.one_of(st.builds(Var, names), st.just(Unit()),
                       st.builds(lambda n: Lit(n, "Int"), st.integers(0, 3)))
    if depth == 0:
        return leaves
    return st.one_of(leaves, st.builds(Pair, values(depth - 1), values(depth - 1)),
                     st.builds(lambda x, c: Lam(PVar(x), c), names, comps(depth - 1)))


def comps(depth):
    ret = st.builds(Return, values(0))
    if depth == 0:
        return ret
    v, c = values(depth - 1), comps(depth - 1)
    return st.one_of(
        ret,
        st.builds(Do, names, c, c),
        st.builds(Let, names, v, c),
        st.builds(App, v, v),
        st.builds(lambda x, body: Op("choose", Unit(), x, body), names, c),
        st.builds(lambda y, c1, z, c2: Sc("once", Unit(), y, c1, z, c2), names, c, names, c),
    )


@given(comps(3), names)
@settings(max_examples=300)
def test_substituting_a_variable_for_itself_is_identity(c, x):
    assert alpha_eq(substitute(c, x, Var(x)), c)


@given(comps(3))
@settings(max_examples=300)
def test_free_vars_match_brute_force_scan(c):
    assert free_vars(c) == brute_free_vars(c)


@given(comps(3), names, values(1))
@settings(max_examples=300)
def test_substitution_commutes_with_renaming(c, x, v):
    # renaming a bound name apart (by substituting a fresh variable for a
    # free one and back) does not change the result of a substitution
    fresh = "w0"
    renamed = substitute(substitute(c, x, Var(fresh)), fresh, Var(x))
    assert alpha_eq(substitute(renamed, x, v), substitute(c, x, v))


@given(comps(3), names, values(1))
@settings(max_examples=300)
def test_substitution_removes_the_variable(c, x, v):
    if x not in free_vars(v):
        assert x not in free_vars(substitute(c, x, v))


@given(comps(3))
@settings(max_examples=200)
def test_pretty_round_trips_generated_terms(c):
    assert alpha_eq(core(pretty(c)), c)
