"""The `lsc` command-line driver.

Exit codes:
    0  success
    1  parse error (or unreadable file)
    2  static error: elaboration or type error, or `run`/`trace` without a main
    3  evaluation ran out of fuel
    4  evaluation got stuck (a primitive failed at run time)
    5  `conform` found property violations
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .diagnostics import StaticError
from .evaluator import DEFAULT_FUEL, FuelExhausted, NormalOp, NormalReturn, NormalSc, Stuck, as_term
from .parser import ParseError
from .pretty import pretty
from .session import Session
from .typechecker import TypeErrorSignal
from .types import pretty_comp, pretty_scheme

TRACE_DEPTH = 40

EXIT_OK, EXIT_PARSE, EXIT_TYPE, EXIT_FUEL, EXIT_STUCK, EXIT_CONFORM = 0, 1, 2, 3, 4, 5


def _parse_error_json(e: ParseError) -> dict:
    sp = e.span
    return {"kind": "ParseError", "span": {"file": sp.file, "line": sp.line, "col": sp.col,
                                           "end_line": sp.end_line, "end_col": sp.end_col},
            "expected": e.expected, "found": e.found}


class Driver:
    def __init__(self, args, out=None):
        self.args = args
        self.out = out or sys.stdout
        self.session: Optional[Session] = None

    def emit(self, text: str = "") -> None:
        print(text, file=self.out)

    def emit_json(self, obj) -> None:
        print(json.dumps(obj), file=self.out)

    def make_session(self) -> Session:
        no_prelude = getattr(self.args, "no_prelude", False)
        self.session = Session(prelude=not no_prelude)
        return self.session

    # loading

    def load(self, path: str):
        """Load one file; returns (exit code, LoadResult or None)."""
        try:
            src = Path(path).read_text(encoding="utf-8")
        except OSError as ex:
            self.error({"kind": "IOError", "note": str(ex)}, f"{path}: {ex.strerror}")
            return EXIT_PARSE, None
        try:
            res = self.session.load(src, path)
        except ParseError as ex:
            self.error(_parse_error_json(ex), str(ex))
            return EXIT_PARSE, None
        if not res.ok:
            for d in res.diagnostics:
                self.error(d.to_json(), d.format())
            return EXIT_TYPE, res
        return EXIT_OK, res

    def error(self, obj: dict, text: str) -> None:
        if self.args.json:
            self.emit_json({"error": obj})
        else:
            print(text, file=sys.stderr)

    # check

    def cmd_check(self) -> int:
        self.make_session()
        files = list(self.args.files)
        if not files or files == ["prelude"] and not Path("prelude").exists():
            from .prelude import load_prelude
            pre = load_prelude()
            return self._report_schemes(pre.schemes, pre.comps, None)
        code = EXIT_OK
        for f in files:
            c, res = self.load(f)
            code = max(code, c)
            if c == EXIT_OK:
                self._report_schemes(res.schemes, res.comps, res.main_type)
        return code

    def _report_schemes(self, schemes: dict, comps: dict, main_type) -> int:
        rows = [(n, pretty_scheme(s)) for n, s in schemes.items()]
        rows += [(n, pretty_comp(c)) for n, c in comps.items()]
        if main_type is not None:
            rows.append(("main", pretty_comp(main_type)))
        for n, t in rows:
            if self.args.json:
                self.emit_json({"name": n, "type": t})
            else:
                self.emit(f"{n} : {t}")
        return EXIT_OK

    # run / trace

    def entry(self):
        """The computation to run: `--expr` if given, else the last file's main."""
        self.make_session()
        main = None
        for f in self.args.files:
            code, res = self.load(f)
            if code != EXIT_OK:
                return code, None
            if res.main is not None:
                main = res.main
        if self.args.expr is not None:
            try:
                c = self.session.expression(self.args.expr, "<expr>")
            except ParseError as ex:
                self.error(_parse_error_json(ex), str(ex))
                return EXIT_PARSE, None
            except StaticError as ex:
                self.error(ex.diagnostic.to_json(), ex.diagnostic.format())
                return EXIT_TYPE, None
            diags = self.session.check_expression(c)
            if diags:
                for d in diags:
                    self.error(d.to_json(), d.format())
                return EXIT_TYPE, None
            return EXIT_OK, c
        if main is None:
            self.error({"kind": "NoMain", "note": "no main computation"},
                       "error: no `main` definition and no --expr given")
            return EXIT_TYPE, None
        return EXIT_OK, main

    def outcome(self, r) -> int:
        if isinstance(r, NormalReturn):
            text = pretty(as_term(r))
        elif isinstance(r, (NormalOp, NormalSc)):
            text = "unhandled " + pretty(as_term(r), depth=3)
        elif isinstance(r, FuelExhausted):
            text = f"fuel exhausted after {r.fuel} steps"
        else:
            text = f"stuck: {r.reason}"
        if self.args.json:
            self.emit_json({"result": type(r).__name__, "term": text})
        elif isinstance(r, (FuelExhausted, Stuck)):
            print(text, file=sys.stderr)
        else:
            self.emit(text)
        if isinstance(r, FuelExhausted):
            return EXIT_FUEL
        if isinstance(r, Stuck):
            return EXIT_STUCK
        return EXIT_OK

    def cmd_run(self) -> int:
        code, c = self.entry()
        if c is None:
            return code
        return self.outcome(self.session.run(c, self.args.fuel, self.args.bind))

    def cmd_trace(self) -> int:
        code, c = self.entry()
        if c is None:
            return code
        tr = self.session.trace(c, self.args.fuel, self.args.bind)
        for i, (rule, term) in enumerate(tr.steps, 1):
            text = pretty(term, depth=self.args.depth)
            if self.args.json:
                self.emit_json({"index": i, "rule": rule, "term": text})
            else:
                self.emit(f"{i} {rule} | {text}")
        return self.outcome(tr.final)

    # repl

    def cmd_repl(self, stdin=None) -> int:
        self.make_session()
        stdin = stdin or sys.stdin
        interactive = stdin.isatty()
        while True:
            if interactive:
                print("lsc> ", end="", file=self.out, flush=True)
            line = stdin.readline()
            if not line:
                return EXIT_OK
            line = line.strip()
            if not line or line.startswith("--"):
                continue
            if line in (":quit", ":q"):
                return EXIT_OK
            self.repl_line(line)

    def repl_line(self, line: str) -> None:
        s = self.session
        try:
            if line.startswith(":t "):
                self.emit(s.show_type(line[3:]))
                return
            if line.startswith(":trace "):
                tr = s.trace(s.expression(line[7:], "<repl>"), self.args.fuel)
                for i, (rule, term) in enumerate(tr.steps, 1):
                    self.emit(f"{i} {rule} | {pretty(term, depth=self.args.depth)}")
                self.outcome(tr.final)
                return
            if self._is_declaration(line):
                res = s.load(line, "<repl>")
                for d in res.diagnostics:
                    self.emit(d.format())
                if not res.ok:
                    return
                for n, sc in res.schemes.items():
                    self.emit(f"{n} : {pretty_scheme(sc)}")
                for n, ct in res.comps.items():
                    self.emit(f"{n} : {pretty_comp(ct)}")
                return
            c = s.expression(line, "<repl>")
            diags = s.check_expression(c)
            if diags:
                for d in diags:
                    self.emit(d.format())
                return
            self.outcome(s.run(c, self.args.fuel))
        except ParseError as ex:
            self.emit(str(ex))
        except StaticError as ex:
            self.emit(ex.diagnostic.format())
        except TypeErrorSignal as ex:
            self.emit(ex.diagnostic.format())

    @staticmethod
    def _is_declaration(line: str) -> bool:
        from .parser import DData, DDef, DEffect, DSig, parse_program
        if line.split(None, 1)[0] in ("data", "effect"):
            return True
        try:
            prog = parse_program(line, "<repl>")
        except ParseError:
            return False
        return all(isinstance(d, (DData, DDef, DEffect, DSig)) for d in prog.decls)

    # conform

    def cmd_conform(self) -> int:
        from .conformance import run_conformance
        self.make_session()
        rep = run_conformance(self.args.seed, self.args.count, self.args.gen_depth,
                              self.args.fuel, self.session)
        if self.args.json:
            self.emit(rep.dumps())
        else:
            self.emit(f"seed {rep.seed}: {rep.total} terms, {len(rep.failures)} failures, "
                      f"{rep.fuel_discards} fuel discards, oracle on {rep.oracle_checked}, "
                      f"coherence on {rep.coherence_checked} ({rep.seconds:.1f}s)")
            for f in rep.failures:
                self.emit(f"  [{f['stage']}] {f['detail']}\n    {f['term']}")
        return EXIT_CONFORM if rep.failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lsc", description="Scoped effects and handlers: "
                                "type checker and interpreter.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-prelude", action="store_true", help="do not load the prelude")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="maximum steps")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="type check files and print schemes")
    c.add_argument("files", nargs="*", help="source files (default: the prelude)")

    for name, text in (("run", "evaluate main"), ("trace", "print every reduction step")):
        r = sub.add_parser(name, parents=[common], help=text)
        r.add_argument("files", nargs="*", help="source files; the last main is used")
        r.add_argument("-e", "--expr", help="evaluate this expression instead of main")
        r.add_argument("--bind", action="store_true",
                       help="forward through bind clauses with the direct bind rule")
        r.add_argument("--depth", type=int, default=TRACE_DEPTH,
                       help="elide trace terms below this depth")

    r = sub.add_parser("repl", parents=[common], help="interactive loop")
    r.add_argument("--depth", type=int, default=TRACE_DEPTH,
                   help="elide traced terms below this depth")

    k = sub.add_parser("conform", parents=[common], help="run the property harness")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--count", type=int, default=1000)
    k.add_argument("--gen-depth", type=int, default=6, help="maximum generated term depth")
    k.set_defaults(fuel=50_000)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.fuel < 1:
        print("error: --fuel must be at least 1", file=sys.stderr)
        return EXIT_TYPE
    d = Driver(args)
    try:
        return getattr(d, f"cmd_{args.command}")()
    except RuntimeError as ex:  # the prelude itself failed to check
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_TYPE


if __name__ == "__main__":
    sys.exit(main())
