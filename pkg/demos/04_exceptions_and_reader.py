"""Exceptions with a scoped catch, and a reader with a scoped local.

With the state handler outside, the counter is never rolled back: the
failed attempt inside catch still counts.  With it inside, the state is
part of the result of the recovered branch.  The handler-encoded catch
cannot express the second behaviour.
"""

from _common import show

print("# exceptions, state handled outside (global)")
show("run_inc 8 (\\_. with h_except handle c_catch)")
print("# exceptions, state handled inside (local)")
show("with h_except handle (run_inc 8 (\\_. c_catch))")

print("\n# the handler-encoded catch counts to 11 in both orders")
show("run_inc 8 (\\_. with h_except_x handle c_catch_x)")
show("with h_except_x handle (run_inc 8 (\\_. c_catch_x))")

print("\n# reader: scoped local also changes what foo sees ...")
show("run_read 1 (\\_. with h_foo handle c_local)")
print("# ... while the handler-encoded local only rewrites direct asks")
show("run_read 1 (\\_. with h_foo handle c_local_x)")
