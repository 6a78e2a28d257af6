"""Nondeterminism with an algebraic choose and its list handler.

A computation that calls `choose` describes a tree of possible results.
The handler h_ND explores the true branch first and concatenates the
results, so the list reads the leaves from left to right.
"""

from _common import show

print("# one choice")
show("with h_ND handle c_ND1")

print("\n# two independent choices give four pairs, leftmost first")
show("with h_ND handle c_ND2")

print("\n# a failing branch contributes nothing")
show("with h_ND handle op choose () (b. if b then failure () else return 7)")

print("\n# handler order matters once state is involved:")
print("# the state handler inside keeps one counter per branch ...")
show("with h_ND handle (run_inc 0 (\\_. c_inc))")
print("# ... while outside it threads one counter through both branches")
show("run_inc 0 (\\_. with h_ND handle c_inc)")
