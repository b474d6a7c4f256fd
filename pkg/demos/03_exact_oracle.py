"""Exact planning on the enumerated product: optimal values, reachable blocks,
and the adaptive loop run with perfect policies.

Run:  python demos/03_exact_oracle.py
"""

from ltlshaping.dfa import fixture_dfa
from ltlshaping.envs import example_grid, flag_grid, parse_map
from ltlshaping.oracle import enumerate_product, policy_progression, theorem_check, value_iteration
from ltlshaping.rewards import make_context

dfa = fixture_dfa()

for name, env in (
    ("flag grid", example_grid()),
    ("flag grid without orange", example_grid("no_orange")),
    ("shortcut grid", flag_grid("shortcut", horizon=15, ap=("o", "b", "y"))),
):
    p = enumerate_product(env, dfa)
    ctx = make_context(dfa, "progression")
    policy, value = value_iteration(p, ctx)
    b = policy_progression(p, ctx.partition, policy)
    print(f"== {name}: {p.n_states} product states")
    print(f"   plain progression optimum: value {value:.3f}, reaches block B{b}")
    for kind in ("adaptive_progression", "adaptive_hybrid"):
        r = theorem_check(p, kind=kind, theta=100)
        trail = " -> ".join(f"B{x.b}" for x in r.rounds)
        print(f"   {kind}: {trail}  ({r.message})")

# A theta that is too small cannot overturn a shortcut that pays off
# immediately; the report then suggests a bound.
corridor = parse_map("BA" + "." * 40 + "ob")
p = enumerate_product(flag_grid(corridor, horizon=42, ap=("o", "b", "y")), dfa)
r = theorem_check(p, kind="adaptive_progression", theta=2, margin=0)
print("\n== corridor, theta=2:", r.message)
