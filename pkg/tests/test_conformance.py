import json

import pytest

from lambdasc.conformance import (
    GenConfig, OracleScope, Report, census, check_coherence, check_progress,
    check_subject_reduction, gen_well_typed, oracle_nondet, run_conformance,
)
from lambdasc.pretty import pretty
from lambdasc.syntax import Return, alpha_eq


# --- generation -------------------------------------------------------------

def test_depth_zero_is_a_returned_literal(session):
    for seed in range(10):
        c = gen_well_typed(GenConfig(seed=seed, depth=0), session)
        assert isinstance(c, Return)


def test_generation_is_reproducible(session):
    cfg = GenConfig(seed=42, depth=5)
    assert alpha_eq(gen_well_typed(cfg, session), gen_well_typed(cfg, session))


def test_seeds_1_to_100_typecheck(session):
    for seed in range(1, 101):
        c = gen_well_typed(GenConfig(seed=seed, depth=6), session)
        assert session.check_expression(c) == [], pretty(c)


def test_generation_covers_handlers_and_scoped_calls(session):
    totals = {"Handle": 0, "Sc": 0, "Op": 0}
    for seed in range(50):
        for k, v in census(gen_well_typed(GenConfig(seed=seed, depth=4), session)).items():
            totals[k] += v
    assert totals["Handle"] >= 1 and totals["Sc"] >= 1 and totals["Op"] >= 1


# --- subject reduction and progress -------------------------------------------

def test_subject_reduction_on_nd_trace(session):
    r = check_subject_reduction(session.expression("with h_ND handle c_ND1"), session)
    assert r["ok"] and r["steps"] > 0 and r["violation"] is None


def test_subject_reduction_vacuous_on_return(session):
    r = check_subject_reduction(session.expression("return ()"), session)
    assert r["ok"] and r["steps"] == 0


@pytest.mark.parametrize("name", ["c_fwd", "c_fwd_x"])
def test_subject_reduction_along_forwarding_derivation(session, name):
    r = check_subject_reduction(session.expression(name), session)
    assert r["ok"] and r["steps"] > 20 and not r["fuel_exhausted"]


def test_progress_on_unhandled_choose(session):
    r = check_progress(session.expression("op choose () (b. return b)"), session)
    assert r == {"ok": True, "result": "NormalOp", "detail": None}


def test_progress_reports_stuck_primitive(session):
    r = check_progress(session.expression("head []"), session)
    assert not r["ok"] and r["result"] == "Stuck"


@pytest.mark.parametrize("name", ["c_ND1", "c_ND2", "c_once", "c_inc", "c_catch", "c_local",
                                  "c_depth", "c_fwd", "c_fwd_x"])
def test_progress_on_prelude_programs(session, name):
    assert check_progress(session.expression(name), session)["ok"]


def test_subject_reduction_detects_a_broken_step(session, monkeypatch):
    import lambdasc.conformance as conf
    from lambdasc.evaluator import Trace
    bad = session.expression('return "oops"')

    def fake_trace(c, env, fuel, use_bind=False):
        return Trace([("E-Fake", bad)], None, 1, [])
    monkeypatch.setattr(conf, "trace", fake_trace)
    r = check_subject_reduction(session.expression("return 1"), session)
    assert not r["ok"] and r["violation"]["rule"] == "E-Fake"


# --- the nondeterminism oracle --------------------------------------------------

def test_oracle_on_nd2(session):
    got = [pretty(v) for v in oracle_nondet(session.expression("c_ND2"), session)]
    assert got == ["(true,true)", "(true,false)", "(false,true)", "(false,false)"]


def test_oracle_on_fail(session):
    assert oracle_nondet(session.expression("op fail () (y. absurd y)"), session) == []


def test_oracle_on_nd1(session):
    assert [pretty(v) for v in oracle_nondet(session.expression("c_ND1"), session)] == ["1", "2"]


def test_oracle_rejects_other_effects(session):
    with pytest.raises(OracleScope):
        oracle_nondet(session.expression("c_once"), session)


# --- coherence and the report ---------------------------------------------------

@pytest.mark.parametrize("src", ["with h_ND handle c_ND2", "c_fwd_x",
                                 "run_inc 8 (\\_. with h_except_x handle c_catch_x)"])
def test_bind_coherence_on_prelude_programs(session, src):
    assert check_coherence(session.expression(src), session)["ok"]


def test_report_shape(session):
    rep = run_conformance(seed=3, count=20, depth=4, session=session)
    j = json.loads(rep.dumps())
    assert set(j) == {"seed", "total", "failures", "fuel_discards"}
    assert j["seed"] == 3 and j["total"] == 20 and j["failures"] == []


def test_fuel_discards_above_one_percent_fail():
    rep = Report(seed=0, total=10)
    rep.fuel_discards = 1
    assert rep.to_json()["fuel_discards"] == 1
    tight = run_conformance(seed=0, count=30, depth=6, fuel=5)
    assert tight.fuel_discards > 0
    assert any(f["stage"] == "fuel" for f in tight.failures)
