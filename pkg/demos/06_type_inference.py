"""Inferred types and effect rows.

Rows are printed sorted, with an open tail `mu` where more effects may be
added.  Handlers get polymorphic types `A!<labels; mu> => M A!<mu>`.
"""

from lambdasc.session import Session
from lambdasc.types import pretty_scheme

from _common import SESSION, typ

print("# functions and computations")
typ("\\x. return x")
typ("c_once")
typ('op raise "e" (y. absurd y)')

print("\n# handlers")
for name in ("h_ND", "h_once", "h_read", "h_cut", "h_token"):
    typ(name)

print("\n# a handler whose carrier forgets the answer type is rejected")
bad = ("q = handler [fun a -> (Bool, Bool)] {return x -> return (true, true), "
       "sc once _ p k -> do xs <- p (); k xs, fwd f p k -> f (p, k)}")
for d in Session().load(bad, "mono.lsc").diagnostics:
    print("  " + d.format())

print("\n# definitions accumulate in a session")
res = SESSION.load("double x = return (x + x)\nquad x = do y <- double x; double y")
for name, scheme in res.schemes.items():
    print(f"  {name} : {pretty_scheme(scheme)}")
