"""Distance-to-acceptance, state partitions and progression values on a DFA."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .dfa import Dfa, DfaAnalysis


@dataclass(frozen=True, eq=False)
class DistanceTable:
    values: np.ndarray
    round: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, q):
        return float(self.values[q])

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return (
            isinstance(other, DistanceTable)
            and self.round == other.round
            and np.array_equal(self.values, other.values)
        )

    def to_dict(self) -> dict:
        return {"round": self.round, "values": [float(x) for x in self.values]}


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint blocks B_0, B_1, ... with B_0 the accepting set."""

    blocks: tuple[frozenset[int], ...]

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)

    def index(self, q: int) -> int:
        for i, b in enumerate(self.blocks):
            if q in b:
                return i
        raise KeyError(q)

    def index_array(self, n_states: int) -> np.ndarray:
        out = np.full(n_states, -1, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def at_or_beyond(self, b: int) -> frozenset[int]:
        out = frozenset()
        for blk in self.blocks[b:]:
            out |= blk
        return out

    def to_list(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]


def difficulty(a: DfaAnalysis, q: int, q2: int) -> float:
    """Cost of moving from ``q`` to ``q2``: |AP| - log2(number of letters doing so)."""
    n = a.count(q, q2)
    if n == 0:
        raise ValueError(f"no letter moves state {q} to state {q2}")
    return a.n_props - math.log2(n)


def trap_distance(d: Dfa) -> float:
    return float(len(d.ap) * d.n_states)


def distances(d: Dfa, a: DfaAnalysis) -> DistanceTable:
    """Round-0 distance-to-acceptance by Dijkstra over reversed DFA edges."""
    n = d.n_states
    dist = np.full(n, math.inf)
    heap = []
    for q in d.accepting:
        dist[q] = 0.0
        heap.append((0.0, q))
    heapq.heapify(heap)
    preds = [[] for _ in range(n)]
    for q in range(n):
        for q2 in a.successors(q):
            if q2 != q:
                preds[q2].append(q)
    done = np.zeros(n, dtype=bool)
    while heap:
        dq, q2 = heapq.heappop(heap)
        if done[q2]:
            continue
        done[q2] = True
        for q in preds[q2]:
            if q in d.accepting:
                continue
            cand = dq + difficulty(a, q, q2)
            if cand < dist[q]:
                dist[q] = cand
                heapq.heappush(heap, (cand, q))
    dist[np.isinf(dist)] = trap_distance(d)
    return DistanceTable(dist, 0)


def partition(d: Dfa, table: DistanceTable) -> Partition:
    """Group non-accepting states by ascending distinct distance value."""
    acc = frozenset(d.accepting)
    blocks = [acc] if acc else [frozenset()]
    rest = [q for q in d.states if q not in acc]
    for value in sorted({table[q] for q in rest}):
        blocks.append(frozenset(q for q in rest if table[q] == value))
    return Partition(tuple(blocks))


def progression(table: DistanceTable, a: DfaAnalysis, q: int, q2: int) -> float:
    """Drop in distance along an edge that cannot be undone; 0 otherwise."""
    if a.count(q, q2) == 0 or a.reachable(q2, q):
        return 0.0
    return max(0.0, table[q] - table[q2])


def progression_matrix(table: DistanceTable, a: DfaAnalysis) -> np.ndarray:
    v = table.values
    diff = np.maximum(0.0, v[:, None] - v[None, :])
    valid = (a.counts > 0) & ~a.reach.T
    return np.where(valid, diff, 0.0)


def update_distances(table: DistanceTable, part: Partition, b: int, theta: float) -> DistanceTable:
    """Add ``theta`` to every state in blocks ``b, b+1, ...``; bump the round."""
    if not theta > 1:
        raise ValueError(f"theta must exceed 1, got {theta}")
    if not 0 <= b <= len(part):
        raise ValueError(f"block index {b} outside 0..{len(part)}")
    v = table.values.copy()
    for q in part.at_or_beyond(b):
        v[q] += theta
    return DistanceTable(v, table.round + 1)
