import pytest

from lambdasc.desugar import Elaborator
from lambdasc.parser import ParseError, parse_expr, parse_program, tokenize
from lambdasc.prelude import load_prelude
from lambdasc.pretty import pretty
from lambdasc.syntax import (
    Case, HandlerVal, If, Lit, Op, Return, Sc, Unit, Var, alpha_eq,
)
from lambdasc.types import RVar, Row, pretty_row


def core(src: str, tables=None):
    return Elaborator(tables).expression(parse_expr(src))


def test_return_unit():
    assert core("return ()") == Return(Unit())


def test_c_once_parses_to_scoped_call_with_two_binders():
    c = core("sc once () (_. op choose () (b. return b)) "
             "(p. do q <- op choose () (b. return b); return (p, q))")
    assert isinstance(c, Sc) and c.label == "once"
    assert isinstance(c.scoped, Op) and c.kvar == "p"


def test_missing_do_body_reports_end_of_input():
    with pytest.raises(ParseError) as ex:
        parse_expr("do x <- return 1")
    assert ex.value.found == "end of input"


def test_parse_errors_are_deterministic():
    errs = []
    for _ in range(2):
        with pytest.raises(ParseError) as ex:
            parse_program("f x = do y <- ; return y", "t.lsc")
        errs.append((str(ex.value), ex.value.expected))
    assert errs[0] == errs[1]


def test_every_node_has_a_span():
    prog = parse_program("main = do x <- op choose (); return x", "m.lsc")
    assert prog.decls[0].span.file == "m.lsc"
    assert prog.decls[0].body.span.line == 1


def test_comments_and_string_escapes():
    toks = tokenize('-- comment\n"a\\"b" \'\\n\'')
    assert [t.kind for t in toks if t.kind != "eof"] == ["string", "char"]


# --- surface sugar ----------------------------------------------------------------

def test_operation_gains_trivial_continuation():
    pre = load_prelude()
    assert alpha_eq(core("op ask ()", pre.tables), core("op ask () (y. return y)", pre.tables))


def test_choice_operator_expands_to_choose():
    pre = load_prelude()
    got = core("op token '0' <> op token '1'", pre.tables)
    want = core("op choose () (b. if b then op token '0' (y. return y) "
                "else op token '1' (y. return y))", pre.tables)
    assert alpha_eq(got, want)


def test_scoped_call_gains_trivial_continuation():
    pre = load_prelude()
    assert alpha_eq(core("sc once () (_. return 1)", pre.tables),
                    core("sc once () (_. return 1) (z. return z)", pre.tables))


def test_case_guard_becomes_an_if():
    c = core("case x of left e | e = 1 -> return 1 | _ -> return 2")
    assert isinstance(c, Case)
    guarded = c.alts[0][1]
    assert "if" in pretty(guarded)


def test_elaboration_is_idempotent_on_core_terms():
    pre = load_prelude()
    c = core("with h_ND handle do x <- op choose (); y <- op choose (); return (x, y)",
             pre.tables)
    assert alpha_eq(core(pretty(c), pre.tables), c)


# --- printing ---------------------------------------------------------------------

def test_pretty_return_unit():
    assert pretty(Return(Unit())) == "return ()"


def test_pretty_row_rendering():
    assert pretty_row(Row(("once", "choose"), RVar("mu"))) == "<choose; once; mu>"


def test_pretty_values_are_compact():
    assert pretty(core("return [(1, true), (2, false)]")) == "return [(1,true),(2,false)]"


def test_pretty_h_nd_round_trips():
    pre = load_prelude()
    h = pre.tables.globals["h_ND"]
    assert isinstance(h, HandlerVal)
    again = core(pretty(h), pre.tables)
    assert alpha_eq(again.value, h)


def test_all_prelude_definitions_round_trip():
    pre = load_prelude()
    for d in pre.program.defs:
        again = core(pretty(d.value), pre.tables)
        assert isinstance(again, Return) and alpha_eq(again.value, d.value), d.name
    for name, c in pre.program.comps:
        assert alpha_eq(core(pretty(c), pre.tables), c), name


def test_literals_print_as_source():
    assert pretty(Lit("a\"b", "String")) == '"a\\"b"'
    assert pretty(Lit("\n", "Char")) == "'\\n'"
    assert pretty(Return(Lit(-1, "Int"))) == "return (-1)"
    assert isinstance(core("if true then return 1 else return 2"), If)
    assert core("return x") == Return(Var("x"))
