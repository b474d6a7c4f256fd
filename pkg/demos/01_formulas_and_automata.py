"""From a co-safe formula to a task automaton, its distances and its partition.

Run:  python demos/01_formulas_and_automata.py
"""

from ltlshaping.dfa import analyze, compile_formula, fixture_dfa, to_dot
from ltlshaping.envs import EXAMPLE_AP, EXAMPLE_FORMULA
from ltlshaping.ltl import parse, progress
from ltlshaping.metrics import distances, partition

# Collect orange and blue in either order, never touching yellow.
f = parse(EXAMPLE_FORMULA, EXAMPLE_AP)
print("formula:", f)

# Progression rewrites the obligation one letter at a time.
g = progress(f, {"o"})
print("after {o}:", g)
print("after {o}{b}:", progress(g, {"b"}))
print("after {y}:", progress(f, {"y"}))

# Exploring all residuals gives the good-prefix automaton.
dfa = compile_formula(f, EXAMPLE_AP, minimal=True)
print(f"\ncompiled automaton: {dfa.n_states} states, accepting {sorted(dfa.accepting)}")

# The hand-written five-state automaton used throughout the worked examples
# treats any letter holding o as "o first", which makes q0 -> q1 cheap.
fx = fixture_dfa()
a = analyze(fx)
d = distances(fx, a)
print("\nfixture distances:")
for q in fx.states:
    print(f"  q{q} ({fx.labels[q]}): {d[q]:g}")
print("partition:", [sorted(b) for b in partition(fx, d)])

print("\nGraphviz source for the fixture:\n")
print(to_dot(fx))
