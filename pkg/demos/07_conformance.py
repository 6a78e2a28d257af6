"""The property harness on a small sample.

Generated terms are well typed by construction.  Each one is traced and
re-typed step by step, run to a normal form, compared with a brute-force
enumeration when it only uses choose and fail, and run both ways when it
mentions a bind handler.
"""

from lambdasc.conformance import GenConfig, gen_well_typed, run_conformance
from lambdasc.pretty import pretty

from _common import SESSION

print("# two generated terms")
for seed in (1, 2):
    c = gen_well_typed(GenConfig(seed=seed, depth=4), SESSION)
    print(f"  seed {seed}: {pretty(c, depth=6)}")
    print(f"    : {SESSION.show_type(pretty(c))}")

rep = run_conformance(seed=0, count=200, depth=6, session=SESSION)
print(f"\n# {rep.total} terms in {rep.seconds:.1f}s: {len(rep.failures)} failures, "
      f"{rep.oracle_checked} oracle checks, {rep.coherence_checked} coherence checks")
print(f"  census {rep.census}")
