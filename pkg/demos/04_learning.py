"""Tabular Q-learning with adaptive rewards.

Office world: learn to fetch coffee and mail and bring both to the office.
Flag grid without orange: the task is impossible; watch the reward adapt and
the greedy policy settle on the best reachable block.

Run:  python demos/04_learning.py
"""

from ltlshaping.dfa import compile_formula, fixture_dfa
from ltlshaping.envs import OFFICE_AP, OFFICE_FORMULA, example_grid, office_world
from ltlshaping.harness import AdaptiveSchedule, evaluate, train
from ltlshaping.ltl import parse
from ltlshaping.rewards import make_context

dfa = compile_formula(parse(OFFICE_FORMULA, OFFICE_AP), OFFICE_AP, minimal=True)
env = office_world()
ctx = make_context(dfa, "adaptive_hybrid")
qt, log, ctx = train(env, dfa, ctx, budget=2000, seed=0, eval_every=250)
print("office world, adaptive hybrid reward")
for rec in log.records:
    print(f"  episode {rec['episodes']:>5}: success {rec['success_rate']:.2f}  sub-goal return {rec['norm_return']:.2f}")
print("  final:", evaluate(env, dfa, qt, 20, seed=1))

dfa = fixture_dfa()
env = example_grid("no_orange")
ctx = make_context(dfa, "adaptive_progression", theta=100)
qt, log, ctx = train(env, dfa, ctx, AdaptiveSchedule(interval=2000), budget=10000, seed=0, eval_every=0)
print("\nflag grid without orange, adaptive progression reward")
for r in log.rounds:
    print(f"  after {r['episode']:>5} episodes: success {r['success_rate']:.2f}, greedy b = {r['b_k']}, eta = {r['eta_k']:.1e}")
print("  final distances:", [f"{x:g}" for x in ctx.current.values])
print("  final:", evaluate(env, dfa, qt, 20, seed=1))
