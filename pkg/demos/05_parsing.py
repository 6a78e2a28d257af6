"""Parser combinators built from token, choose and the scoped call/cut.

The optimized grammar commits to a parse with cut inside call, so only the
complete parse of "(2+5)*8" remains.  The naive grammar also returns the
partial parse that stops before "*8".  The same programs live in
parser_opt.lsc and parser_naive.lsc for `lsc run`.
"""

from _common import show

INPUT = '"(2+5)*8"'

print("# optimized expr")
show(f"with h_cut handle (do f <- with h_token handle expr (); f {INPUT})")
print("\n# naive expr'")
show(f"with h_cut handle (do f <- with h_token handle expr' (); f {INPUT})")
print("\n# single digits and repetition")
show('with h_cut handle (do f <- with h_token handle many1 digit; f "42x")')
