"""Progression and hybrid rewards on the flag grid, before and after one adaptive round.

Three hand-picked behaviours on the 25-step flag grid:
  pi1 walks to the far blue flag and stops (never finishes),
  pi2 takes orange then the near blue flag (finishes at step 20),
  pi3 walks into yellow (fails at step 5).

Run:  python demos/02_reward_shaping.py
"""

import numpy as np

from ltlshaping.dfa import fixture_dfa
from ltlshaping.experiment import EXAMPLE_PATHS
from ltlshaping.oracle import trajectory_return
from ltlshaping.rewards import advance_round, make_context

dfa = fixture_dfa()
np.set_printoptions(precision=3, suppress=True)

for kind in ("progression", "hybrid"):
    print(f"{kind} reward matrix (row = from, column = to):")
    print(make_context(dfa, kind).matrix, "\n")

print(f"{'kind':<22}{'pi1':>8}{'pi2':>8}{'pi3':>8}")
for kind in ("progression", "hybrid", "adaptive_progression", "adaptive_hybrid"):
    ctx = make_context(dfa, kind, theta=100)
    if ctx.kind.adaptive:
        # greedy play only ever reached block B1, so raise everything from B1 up
        ctx = advance_round(ctx, 1)
    row = [trajectory_return(EXAMPLE_PATHS[name][0], ctx, 0.9) for name in ("pi1", "pi2", "pi3")]
    print(f"{kind:<22}" + "".join(f"{v:8.2f}" for v in row))

# Under the round-0 rewards the shortcut pi1 looks best; one round later
# finishing the task (pi2) dominates.
