"""The standard prelude: effect signatures, handlers and example programs.

The `.lsc` sources in this directory are loaded in the order of `FILES`
and checked as one program.  Setting the environment variable
`LSC_PRELUDE` to a file or directory replaces the bundled sources.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..diagnostics import Diagnostic
from ..desugar import Elaborator, Tables
from ..parser import SurfaceProgram, parse_program, parse_type
from ..syntax import Program
from ..typechecker import Checker, InferenceState
from ..types import pretty_scheme, type_equiv

FILES = ("base.lsc", "nondet.lsc", "state.lsc", "exceptions.lsc", "reader.lsc", "cut.lsc",
         "depth.lsc", "parsing.lsc")

# Schemes every bundled definition must be given, in canonical printed form.
MANIFEST = {
    "concatMap": "forall a b mu. List b ->^mu (b ->^mu List a) ->^mu List a",
    "exceptMap": "forall a b mu. String + b ->^mu (b ->^mu String + a) ->^mu String + a",
    "h_ND": "forall a mu. a!<choose; fail; mu> => List a!<mu>",
    "h_once": "forall a mu. a!<choose; once; mu> => List a!<mu>",
    "h_except": "forall a mu. a!<raise; catch; mu> => String + a!<mu>",
    "h_read": "forall a mu. a!<ask; local; mu> => (Int ->^mu a)!<mu>",
    "h_cut": "forall a mu. a!<choose; fail; cut; call; mu> => CutList a!<mu>",
    "h_depth": "forall a mu. a!<choose; fail; depth; mu> => (Int ->^mu List (a, Int))!<mu>",
    "h_token": "forall a mu. a!<token; fail; mu> => (String ->^<fail; mu> (a, String))!<fail; mu>",
    "append_CutList": "forall a mu. CutList a ->^mu CutList a ->^mu CutList a",
    "concatMap_CutList": "forall a b mu. CutList b ->^mu (b ->^mu CutList a) ->^mu CutList a",
    "open": "forall a mu. CutList a ->^mu CutList a",
    "close": "forall a mu. CutList a ->^mu CutList a",
    "isclose": "forall a mu. CutList a ->^mu Bool",
    "many1": "forall a mu. (() -> a!<choose; mu>) -> List a!<choose; mu>",
    "digit": "forall mu. () -> Char!<token; choose; mu>",
    "expr'": "forall mu. () -> Int!<token; choose; mu>",
    "term'": "forall mu. () -> Int!<token; choose; mu>",
    "factor": "forall mu. () -> Int!<token; choose; mu>",
    "expr": "forall mu. () -> Int!<token; choose; cut; call; mu>",
    "term": "forall mu. () -> Int!<token; choose; cut; call; mu>",
}


@dataclass
class Prelude:
    tables: Tables
    program: Program
    schemes: dict                 # definition name -> Scheme
    comps: dict                   # named computation -> CompType
    diagnostics: list = field(default_factory=list)
    files: tuple = ()


def source_paths(override: Optional[str] = None) -> list:
    """The prelude files to load, honouring `LSC_PRELUDE`."""
    root = override if override is not None else os.environ.get("LSC_PRELUDE")
    if root:
        p = Path(root)
        if p.is_dir():
            return sorted(p.glob("*.lsc"))
        return [p]
    here = Path(__file__).parent
    return [here / f for f in FILES]


def parse_sources(paths) -> SurfaceProgram:
    decls: list = []
    for p in paths:
        decls.extend(parse_program(Path(p).read_text(encoding="utf-8"), str(p)).decls)
    return SurfaceProgram(tuple(decls), "<prelude>")


def manifest_mismatches(el: Elaborator, schemes: dict) -> list:
    """One diagnostic per defined name whose scheme differs from `MANIFEST`."""
    out = []
    for name, want in MANIFEST.items():
        got = schemes.get(name)
        if got is None:
            continue
        expected = el.resolve_scheme(parse_type(want, "<manifest>"))
        if not type_equiv(got, expected):
            out.append(Diagnostic("TypeMismatch", None, pretty_scheme(expected),
                                  pretty_scheme(got), f"prelude definition {name}"))
    return out


_CACHE: dict = {}


def load_prelude(override: Optional[str] = None) -> Prelude:
    """Parse, elaborate and type check the prelude (cached per source set)."""
    paths = source_paths(override)
    key = tuple(str(p) for p in paths)
    if key in _CACHE:
        return _CACHE[key]
    surface = parse_sources(paths)
    el = Elaborator()
    prog = el.elaborate(surface)
    checker = Checker(el.t, InferenceState())
    res = checker.check_program(prog)
    diags = list(el.diagnostics) + res.diagnostics
    if not diags:
        diags = manifest_mismatches(el, res.schemes)
    pre = Prelude(el.t, prog, res.schemes, res.comps, diags, key)
    _CACHE[key] = pre
    return pre
