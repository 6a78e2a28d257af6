import io
import json
from pathlib import Path

import pytest

from lambdasc.cli import main

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def write(tmp_path):
    def go(text: str, name: str = "t.lsc") -> str:
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return go


# --- check ------------------------------------------------------------------

def test_check_prelude(capsys):
    code, out, _ = run_cli(capsys, "check", "prelude")
    assert code == 0
    assert "h_once : forall a mu. a!<choose; once; mu> => List a!<mu>" in out.splitlines()


def test_check_prints_definitions_and_main(capsys, write):
    code, out, _ = run_cli(capsys, "check", write("double x = return (x + x)\nmain = double 2"))
    assert code == 0
    assert out.splitlines() == ["double : forall mu. Int -> Int!<mu>", "main : Int!<mu>"]


def test_check_unbound_variable(capsys, write):
    code, _, err = run_cli(capsys, "check", write("f x = return y"))
    assert code == 2
    assert len(err.strip().splitlines()) == 1 and "UnboundVar" in err


def test_check_broken_syntax(capsys, write):
    code, _, err = run_cli(capsys, "check", write("f x = return (("))
    assert code == 1 and "parse error" in err


def test_check_missing_file(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "check", str(tmp_path / "absent.lsc"))
    assert code == 1


def test_check_json_diagnostic(capsys, write):
    code, out, _ = run_cli(capsys, "check", "--json", write("f x = return y"))
    assert code == 2
    (line,) = out.splitlines()
    err = json.loads(line)["error"]
    assert set(err) == {"kind", "span", "expected", "actual", "note"}
    assert err["kind"] == "UnboundVar" and err["span"]["line"] == 1


# --- run ----------------------------------------------------------------------

@pytest.mark.parametrize("demo,want", [
    ("parser_opt.lsc", 'return (opened [(56,"")])'),
    ("parser_naive.lsc", 'return (opened [(56,""),(7,"*8")])'),
])
def test_run_parser_demos(capsys, demo, want):
    code, out, _ = run_cli(capsys, "run", str(DEMOS / demo))
    assert code == 0 and out.strip() == want


def test_run_unit_main(capsys, write):
    code, out, _ = run_cli(capsys, "run", write("main = return ()"))
    assert code == 0 and out.strip() == "return ()"


def test_run_expression(capsys):
    code, out, _ = run_cli(capsys, "run", "-e", "with h_ND handle c_ND1")
    assert code == 0 and out.strip() == "return [1,2]"


def test_run_unhandled_operation(capsys):
    code, out, _ = run_cli(capsys, "run", "-e", "op choose () (b. return b)")
    assert code == 0 and out.startswith("unhandled op choose ()")


def test_run_out_of_fuel(capsys):
    code, _, err = run_cli(capsys, "run", "--fuel", "10", "-e", "with h_ND handle c_ND2")
    assert code == 3 and "fuel exhausted after 10 steps" in err


def test_run_stuck_primitive(capsys):
    code, _, err = run_cli(capsys, "run", "-e", "head []")
    assert code == 4 and err.startswith("stuck:")


def test_run_without_main(capsys, write):
    code, _, _ = run_cli(capsys, "run", write("f x = return x"))
    assert code == 2


def test_run_without_prelude(capsys):
    code, _, _ = run_cli(capsys, "run", "--no-prelude", "-e", "with h_ND handle c_ND1")
    assert code == 2
    code, out, _ = run_cli(capsys, "run", "--no-prelude", "-e", "return (1 + 2)")
    assert code == 0 and out.strip() == "return 3"


def test_run_json(capsys):
    code, out, _ = run_cli(capsys, "run", "--json", "-e", "return [1]")
    assert code == 0 and json.loads(out) == {"result": "NormalReturn", "term": "return [1]"}


def test_bad_fuel(capsys):
    code, _, _ = run_cli(capsys, "run", "--fuel", "0", "-e", "return ()")
    assert code == 2


# --- trace ----------------------------------------------------------------------

def test_trace_nd1_rule_sequence(capsys):
    code, out, _ = run_cli(capsys, "trace", "-e", "with h_ND handle c_ND1")
    assert code == 0
    rules = [line.split()[1] for line in out.splitlines()[:-1]]
    assert rules[:4] == ["E-HandOp", "E-AppAbs", "E-IfTrue", "E-HandRet"]
    assert out.splitlines()[-1] == "return [1,2]"


def test_trace_return_has_no_steps(capsys):
    code, out, _ = run_cli(capsys, "trace", "-e", "return ()")
    assert code == 0 and out.splitlines() == ["return ()"]


def test_trace_json_lines(capsys):
    code, out, _ = run_cli(capsys, "trace", "--json", "-e", "with h_ND handle c_ND1")
    lines = [json.loads(x) for x in out.splitlines()]
    assert all(set(x) == {"index", "rule", "term"} for x in lines[:-1])
    assert [x["index"] for x in lines[:-1]] == list(range(1, len(lines)))
    assert lines[-1] == {"result": "NormalReturn", "term": "return [1,2]"}


RULES = {"E-AppAbs", "E-Let", "E-IfTrue", "E-IfFalse", "E-Case", "E-Prim", "E-DoRet",
         "E-DoOp", "E-DoSc", "E-HandRet", "E-HandOp", "E-FwdOp", "E-HandSc", "E-FwdSc",
         "E-Bind"}


@pytest.mark.parametrize("name,flags,want,via", [
    ("c_fwd", (), "return [(true,1)]", "E-FwdSc"),
    ("c_fwd_x", (), "return [(true,1),(false,1)]", "E-FwdSc"),
    ("c_fwd_x", ("--bind",), "return [(true,1),(false,1)]", "E-Bind"),
])
def test_trace_forwarding_example(capsys, name, flags, want, via):
    code, out, _ = run_cli(capsys, "trace", *flags, "-e", name)
    lines = out.splitlines()
    assert code == 0 and lines[-1] == want
    rules = [line.split(" | ")[0].split()[1] for line in lines[:-1]]
    assert set(rules) <= RULES and via in rules


# --- repl and conform ---------------------------------------------------------------

def test_repl_session(capsys, monkeypatch):
    lines = [":t \\x. return x", "with h_ND handle c_ND1", ":t h_read",
             "double x = return (x + x)", "double 21", "f = \\x. return y", "1 +",
             ":trace return 1", ":quit", "never reached"]
    monkeypatch.setattr("sys.stdin", io.StringIO("\n".join(lines) + "\n"))
    code, out, _ = run_cli(capsys, "repl")
    got = out.splitlines()
    assert code == 0
    assert got[0] == "forall a mu. a -> a!<mu>"
    assert got[1] == "return [1,2]"
    assert got[2] == "forall a mu. a!<ask; local; mu> => (Int -> a!<mu>)!<mu>"
    assert got[3] == "double : forall mu. Int -> Int!<mu>"
    assert got[4] == "return 42"
    assert "UnboundVar" in got[5]
    assert "parse error" in got[6]
    assert got[7] == "return 1"
    assert len(got) == 8


def test_conform_small(capsys):
    code, out, _ = run_cli(capsys, "conform", "--count", "10", "--gen-depth", "4", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["total"] == 10 and rep["failures"] == []
