"""Taxi world on the classic 5x5 grid with a fifth pickup stand in the centre.

State: ``(row, col, passenger, destination, event)`` where ``passenger`` is a
stand index, ``IN_TAXI`` or ``DELIVERED`` and ``event`` is the letter emitted
on arrival in that state (pickup, arrival at the destination with the
passenger aboard, or drop-off).
"""

from __future__ import annotations

from .base import EnvError, LabeledEnv, merge_outcomes
from .grid import DEFAULT_NOISE

TAXI_AP = ("p", "g", "f")
TAXI_FORMULA = "F (p & F (g & F f))"
TAXI_HORIZON = 200

NORTH, SOUTH, EAST, WEST, PICKUP, DROPOFF = range(6)
_MOVES = {NORTH: (-1, 0), SOUTH: (1, 0), EAST: (0, 1), WEST: (0, -1)}
_PERP = {NORTH: (EAST, WEST), SOUTH: (EAST, WEST), EAST: (NORTH, SOUTH), WEST: (NORTH, SOUTH)}

SIZE = 5
STANDS = ((0, 0), (0, 4), (4, 0), (4, 3), (2, 2))  # R, G, Y, B, centre
DESTINATIONS = (0, 1, 2, 3)
IN_TAXI = len(STANDS)
DELIVERED = IN_TAXI + 1

# vertical wall segments: moving east from (r, c) is blocked
_EAST_WALLS = {(0, 1), (1, 1), (3, 0), (3, 2), (4, 0), (4, 2)}

P, G, F = 1, 2, 4


class TaxiEnv(LabeledEnv):
    action_names = ("north", "south", "east", "west", "pickup", "dropoff")
    ap = TAXI_AP

    def __init__(self, noise: float = 0.0, infeasible: bool = False, horizon: int = TAXI_HORIZON, stands=STANDS, seed=None):
        super().__init__(seed)
        if not 0.0 <= noise < 1.0:
            raise EnvError(f"noise must lie in [0, 1), got {noise}")
        self.noise = float(noise)
        self.infeasible = infeasible
        self.horizon = int(horizon)
        self.stands = tuple(tuple(s) for s in stands)

    def initial_distribution(self):
        starts = []
        for r in range(SIZE):
            for c in range(SIZE):
                for p in range(len(self.stands)):
                    for d in DESTINATIONS:
                        if self.stands[p] != self.stands[d]:
                            starts.append((r, c, p, d, 0))
        w = 1.0 / len(starts)
        return [(s, w) for s in starts]

    def _blocked(self, r, c, action, dest):
        dr, dc = _MOVES[action]
        nr, nc = r + dr, c + dc
        if not (0 <= nr < SIZE and 0 <= nc < SIZE):
            return True
        if action == EAST and (r, c) in _EAST_WALLS:
            return True
        if action == WEST and (r, c - 1) in _EAST_WALLS:
            return True
        # infeasible variant: the destination stand is walled off
        return self.infeasible and (nr, nc) == self.stands[dest]

    def _drive(self, state, action):
        r, c, p, d, _ = state
        if self._blocked(r, c, action, d):
            return (r, c, p, d, 0)
        dr, dc = _MOVES[action]
        nr, nc = r + dr, c + dc
        event = G if p == IN_TAXI and (nr, nc) == self.stands[d] else 0
        return (nr, nc, p, d, event)

    def outcomes(self, state, action):
        r, c, p, d, _ = state
        if p == DELIVERED:
            return [((r, c, p, d, 0), 1.0)]
        if action == PICKUP:
            if p < IN_TAXI and (r, c) == self.stands[p]:
                return [((r, c, IN_TAXI, d, P), 1.0)]
            return [((r, c, p, d, 0), 1.0)]
        if action == DROPOFF:
            if p == IN_TAXI and (r, c) == self.stands[d]:
                return [((r, c, DELIVERED, d, F), 1.0)]
            return [((r, c, p, d, 0), 1.0)]
        if self.noise > 0:
            a, b = _PERP[action]
            choices = [(action, 1 - self.noise), (a, self.noise / 2), (b, self.noise / 2)]
        else:
            choices = [(action, 1.0)]
        return merge_outcomes((self._drive(state, act), pr) for act, pr in choices)

    def label(self, state) -> int:
        return state[4]

    def env_done(self, state) -> bool:
        return state[2] == DELIVERED


def taxi_world(variant: str = "deterministic", noise: float | None = None, horizon: int = TAXI_HORIZON, seed=None):
    if variant not in ("deterministic", "noisy", "infeasible"):
        raise EnvError(f"unknown taxi variant {variant!r}")
    if noise is None:
        noise = DEFAULT_NOISE if variant == "noisy" else 0.0
    return TaxiEnv(noise=noise, infeasible=variant == "infeasible", horizon=horizon, seed=seed)
