"""Labelled episodic environments with exact outcome distributions."""

from __future__ import annotations

from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

State = Hashable


class EnvError(ValueError):
    pass


class LabeledEnv:
    """Episodic MDP whose states carry a letter over ``ap``.

    Subclasses implement :meth:`initial_distribution`, :meth:`outcomes`,
    :meth:`label` and (optionally) :meth:`env_done`.  Sampling in :meth:`step`
    uses the same outcome lists, so enumerated and sampled behaviour agree.
    """

    ap: tuple[str, ...] = ()
    action_names: tuple[str, ...] = ()
    horizon: int = 100
    enumerable: bool = True

    def __init__(self, seed=None):
        self.rng = np.random.default_rng(seed)
        self.state = None
        self._cache: dict = {}

    @property
    def n_actions(self) -> int:
        return len(self.action_names)

    # model -----------------------------------------------------------------

    def initial_distribution(self) -> list[tuple[State, float]]:
        raise NotImplementedError

    def outcomes(self, state: State, action: int) -> list[tuple[State, float]]:
        raise NotImplementedError

    def label(self, state: State) -> int:
        raise NotImplementedError

    def env_done(self, state: State) -> bool:
        return False

    # sampling ----------------------------------------------------------------

    def _sample(self, dist):
        if len(dist) == 1:
            return dist[0][0]
        u = self.rng.random()
        acc = 0.0
        for s, p in dist:
            acc += p
            if u < acc:
                return s
        return dist[-1][0]

    def reset(self, seed=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.state = self._sample(self.initial_distribution())
        return self.state, self.label(self.state)

    def step(self, action: int):
        if self.state is None:
            raise EnvError("call reset() before step()")
        key = (self.state, action)
        dist = self._cache.get(key)
        if dist is None:
            dist = self.outcomes(self.state, action)
            self._cache[key] = dist
        self.state = self._sample(dist)
        return self.state, self.label(self.state), self.env_done(self.state)


def merge_outcomes(pairs: Iterable[tuple[State, float]]) -> list[tuple[State, float]]:
    merged: dict = {}
    for s, p in pairs:
        if p > 0:
            merged[s] = merged.get(s, 0.0) + p
    return list(merged.items())


class SubgoalRewarder:
    """Pays 1 the first time each sub-goal predicate holds for the DFA state.

    Used only for evaluation metrics, never for learning.
    """

    def __init__(self, predicates: Sequence[Callable[[int], bool]], names: Sequence[str] | None = None):
        self.predicates = list(predicates)
        self.names = list(names) if names is not None else [f"subgoal {i}" for i in range(len(self.predicates))]
        self.reached = [False] * len(self.predicates)

    def __len__(self):
        return len(self.predicates)

    @classmethod
    def from_partition(cls, partition, initial_state: int) -> "SubgoalRewarder":
        """One sub-goal per block strictly better than the initial state's block."""
        start = partition.index(initial_state)
        index = {q: i for i, b in enumerate(partition) for q in b}
        preds = []
        names = []
        for level in range(start - 1, -1, -1):
            preds.append(lambda q, level=level: index[q] <= level)
            names.append(f"reach B{level}")
        return cls(preds, names)

    def reset(self, q: int | None = None) -> float:
        self.reached = [False] * len(self.predicates)
        return self.observe(q) if q is not None else 0.0

    def observe(self, q: int) -> float:
        total = 0.0
        for i, pred in enumerate(self.predicates):
            if not self.reached[i] and pred(q):
                self.reached[i] = True
                total += 1.0
        return total
