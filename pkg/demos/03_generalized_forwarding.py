"""Forwarding a scoped operation through a handler with a non-trivial carrier.

h_inc handles a counter and has the carrier `Int -> (a, Int)`.  When the
scoped `once` passes through it, the fwd clause must thread the counter
into the scoped computation and out of the continuation.  A handler that
only gives a bind clause forwards through the plain monadic bind, which
cannot do that; the choice after `once` then survives.
"""

from lambdasc.pretty import pretty

from _common import SESSION, show

print("# the fwd clause of h_inc keeps the scope intact")
show("c_fwd")

print("\n# the bind-only h_inc_x loses it (both through its fwd desugaring and E-Bind)")
show("c_fwd_x")
show("c_fwd_x", use_bind=True)

print("\n# the first reduction steps of the fwd derivation")
tr = SESSION.trace(SESSION.expression("c_fwd"))
for i, (rule, term) in enumerate(tr.steps[:8], 1):
    print(f"  {i:2d} {rule:9s} | {pretty(term, depth=5)}")
print(f"  ... {len(tr.steps)} steps in total")
