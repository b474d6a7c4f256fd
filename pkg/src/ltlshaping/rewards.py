"""Reward functions over DFA transitions of a product MDP.

Every reward here depends only on the DFA source and target states, so a
:class:`RewardContext` precomputes the full ``|Q| x |Q|`` reward matrix once
per round.  Contexts are immutable; :func:`advance_round` returns a new one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .dfa import Dfa, DfaAnalysis, analyze
from .metrics import DistanceTable, Partition, distances, partition, progression_matrix, update_distances

DEFAULT_ETA0 = 0.1


class RewardKind(str, enum.Enum):
    PROGRESSION = "progression"
    HYBRID = "hybrid"
    ADAPTIVE_PROGRESSION = "adaptive_progression"
    ADAPTIVE_HYBRID = "adaptive_hybrid"
    NAIVE = "naive"

    @property
    def adaptive(self) -> bool:
        return self in (RewardKind.ADAPTIVE_PROGRESSION, RewardKind.ADAPTIVE_HYBRID)

    @property
    def hybrid(self) -> bool:
        return self in (RewardKind.HYBRID, RewardKind.ADAPTIVE_HYBRID)


class TransitionView(NamedTuple):
    source: int
    target: int
    state: object = None
    action: object = None
    next_state: object = None


@dataclass(frozen=True, eq=False)
class RewardContext:
    kind: RewardKind
    analysis: DfaAnalysis
    base: DistanceTable
    current: DistanceTable
    partition: Partition
    eta0: float = DEFAULT_ETA0
    theta: float = 2.0
    history: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", RewardKind(self.kind))
        if not 0.0 <= self.eta0 <= 1.0:
            raise ValueError(f"eta0 must lie in [0, 1], got {self.eta0}")
        if not self.theta > 1:
            raise ValueError(f"theta must exceed 1, got {self.theta}")

    @property
    def round(self) -> int:
        return self.current.round

    @property
    def eta(self) -> float:
        """Self-loop weight of the current round, eta0 / theta**k."""
        return self.eta0 / self.theta ** self.round

    @cached_property
    def base_progression(self) -> np.ndarray:
        return progression_matrix(self.base, self.analysis)

    @cached_property
    def current_progression(self) -> np.ndarray:
        return progression_matrix(self.current, self.analysis)

    @cached_property
    def matrix(self) -> np.ndarray:
        """``matrix[q, q']`` is the reward for a DFA move from q to q'."""
        n = self.analysis.n_states
        kind = self.kind
        if kind is RewardKind.PROGRESSION:
            out = self.base_progression.copy()
        elif kind is RewardKind.ADAPTIVE_PROGRESSION:
            out = np.maximum(self.base_progression, self.current_progression)
        elif kind is RewardKind.HYBRID:
            out = (1 - self.eta0) * self.base_progression
            out[np.diag_indices(n)] = 0.0 - self.eta0 * self.base.values
        elif kind is RewardKind.ADAPTIVE_HYBRID:
            eta = self.eta
            out = (1 - eta) * np.maximum(self.base_progression, self.current_progression)
            out[np.diag_indices(n)] = 0.0 - eta * self.current.values
        else:
            d = self.base.values
            out = ((d[:, None] > d[None, :]) & self.analysis.reaches_accepting[:, None]).astype(float)
        out.setflags(write=False)
        return out

    def __call__(self, q: int, q2: int) -> float:
        return float(self.matrix[q, q2])

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "round": self.round,
            "eta": self.eta,
            "theta": self.theta,
            "distances": [float(x) for x in self.current.values],
            "history": list(self.history),
        }


def default_theta(base_progression: np.ndarray) -> float:
    """Sum of all round-0 progression values, floored at 2."""
    return max(2.0, float(np.sum(base_progression)))


def make_context(
    dfa: Dfa,
    kind: RewardKind | str,
    *,
    eta0: float = DEFAULT_ETA0,
    theta: float | None = None,
    analysis: DfaAnalysis | None = None,
) -> RewardContext:
    """Round-0 context for ``dfa``; ``theta=None`` picks :func:`default_theta`."""
    a = analysis if analysis is not None else analyze(dfa)
    d0 = distances(dfa, a)
    part = partition(dfa, d0)
    if theta is None:
        theta = default_theta(progression_matrix(d0, a))
    return RewardContext(RewardKind(kind), a, d0, d0, part, eta0, float(theta))


def reward(ctx: RewardContext, tv: TransitionView | tuple[int, int]) -> float:
    return float(ctx.matrix[tv[0], tv[1]])


def advance_round(ctx: RewardContext, b: int) -> RewardContext:
    """Apply one distance update at block index ``b`` and shrink eta by theta."""
    if not ctx.kind.adaptive:
        raise ValueError(f"{ctx.kind.value} rewards do not adapt")
    updated = update_distances(ctx.current, ctx.partition, b, ctx.theta)
    return RewardContext(
        ctx.kind, ctx.analysis, ctx.base, updated, ctx.partition, ctx.eta0, ctx.theta, ctx.history + (int(b),)
    )
