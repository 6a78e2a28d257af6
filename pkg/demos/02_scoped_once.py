"""Scoped operations: `once` delimits the computation it applies to.

`sc once () (_. p) (z. k)` keeps the first result of `p` and continues with
`k`.  Encoding once as an ordinary operation whose continuation is the rest
of the program cuts too much: the second choice after `once` is lost.
"""

from _common import show

print("# scoped once: only the first choice is pruned")
show("with h_once handle c_once")

print("\n# algebraic encoding: the later choice is pruned as well")
show("with h_once_x handle c_once_x")

print("\n# the depth-bounded search handler interprets a scoped depth operation")
show("(with h_depth handle c_depth) 2")
