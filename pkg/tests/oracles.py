"""Independent reference implementations used only by the tests.

None of these share code with the package beyond the formula node classes.
"""

from __future__ import annotations

import functools
import itertools
import math
import random

import numpy as np

from ltlshaping.ltl import FALSE, TRUE, And, Atom, Const, Eventually, NegAtom, Next, Or, Until


# ---------------------------------------------------------------------------
# finite-trace semantics


@functools.lru_cache(maxsize=8)
def all_traces(n_letters: int, length: int) -> np.ndarray:
    """Every trace of the given length, one column per trace, lexicographic order.

    Shape is ``(length, n_letters ** length)``; row ``i`` holds the letters at
    position ``i``.
    """
    if length == 0:
        return np.zeros((0, 1), dtype=np.uint8)
    out = np.indices((n_letters,) * length, dtype=np.uint8).reshape(length, -1)
    out.setflags(write=False)
    return out


def strong_sat(f, traces: np.ndarray, ap) -> np.ndarray:
    """Witnessed satisfaction at every position of every finite trace.

    ``traces`` is position-major as returned by :func:`all_traces`.  Returns a
    bool array of shape ``(n + 1, m)``; row ``n`` is the empty suffix.  Atoms
    (and negated atoms) need an actual letter; ``X``, ``F`` and ``U`` look
    ahead only as far as the trace reaches.  A prefix is good iff every long
    enough extension satisfies ``f`` at position 0.
    """
    n, m = traces.shape
    bit = {p: 1 << i for i, p in enumerate(ap)}

    def ev(g):
        if isinstance(g, Const):
            return np.full((n + 1, m), g.value)
        if isinstance(g, (Atom, NegAtom)):
            out = np.zeros((n + 1, m), dtype=bool)
            has = (traces & bit[g.name]) != 0
            out[:n] = has if isinstance(g, Atom) else ~has
            return out
        if isinstance(g, And):
            return np.logical_and.reduce([ev(a) for a in g.args])
        if isinstance(g, Or):
            return np.logical_or.reduce([ev(a) for a in g.args])
        if isinstance(g, Next):
            s = ev(g.sub)
            out = s.copy()
            out[:n] = s[1:]
            return out
        if isinstance(g, Eventually):
            out = ev(g.sub)
            for i in range(n - 1, -1, -1):
                out[i] |= out[i + 1]
            return out
        if isinstance(g, Until):
            lhs, out = ev(g.lhs), ev(g.rhs)
            for i in range(n - 1, -1, -1):
                out[i] |= lhs[i] & out[i + 1]
            return out
        raise TypeError(g)

    return ev(f)


def good_prefix_table(f, ap, max_len: int, total_len: int) -> dict[int, np.ndarray]:
    """For each prefix length ``n <= max_len``: good-prefix flags for all ``n``-letter traces.

    A prefix counts as good when every extension to ``total_len`` letters
    satisfies ``f``.  Witnessed satisfaction is sound, so a ``True`` flag is
    always right; a ``False`` flag may just mean the lookahead was too short.
    """
    k = 2 ** len(ap)
    sat = strong_sat(f, all_traces(k, total_len), ap)[0]
    out = {}
    for n in range(max_len + 1):
        out[n] = sat.reshape(k ** n, k ** (total_len - n)).all(axis=1)
    return out


def good_prefix(f, ap, word, lookahead: int) -> bool:
    """Single-word version of :func:`good_prefix_table` with explicit lookahead."""
    k = 2 ** len(ap)
    tails = all_traces(k, lookahead)
    head = np.repeat(np.asarray(word, dtype=np.uint8).reshape(-1, 1), tails.shape[1], axis=1)
    return bool(strong_sat(f, np.vstack([head, tails]), ap)[0].all())


def dfa_accepts_all(d, length: int) -> np.ndarray:
    """Acceptance flags of every trace of ``length`` letters, same order as :func:`all_traces`."""
    q = np.full(1, d.initial, dtype=np.int64)
    for _ in range(length):
        q = d.delta[q].reshape(-1)
    acc = np.zeros(d.n_states, dtype=bool)
    acc[list(d.accepting)] = True
    return acc[q]


# ---------------------------------------------------------------------------
# formula generation


def random_formula(rng: random.Random, ap, depth: int):
    """Random co-safe formula of nesting depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.05:
            return TRUE if rng.random() < 0.5 else FALSE
        name = rng.choice(ap)
        return Atom(name) if r < 0.65 else NegAtom(name)
    op = rng.choice(["and", "or", "next", "eventually", "until", "until"])
    if op == "and":
        return And(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1))
    if op == "or":
        return Or(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1))
    if op == "next":
        return Next(random_formula(rng, ap, depth - 1))
    if op == "eventually":
        return Eventually(random_formula(rng, ap, depth - 1))
    return Until(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1))


# ---------------------------------------------------------------------------
# distance fixpoint


def fixpoint_distances(delta: np.ndarray, accepting, n_props: int) -> np.ndarray:
    """Iterate d(q) = min over successors q' != q of h(q, q') + d(q') to a fixpoint.

    Accepting states are pinned to 0; states that never get a finite value
    take |AP| * |Q|.
    """
    n, k = delta.shape
    counts = np.zeros((n, n), dtype=np.int64)
    for q in range(n):
        for letter in range(k):
            counts[q, delta[q, letter]] += 1
    d = np.full(n, np.inf)
    for q in accepting:
        d[q] = 0.0
    changed = True
    while changed:
        changed = False
        for q in range(n):
            if q in accepting:
                continue
            for q2 in range(n):
                if q2 == q or counts[q, q2] == 0:
                    continue
                cand = n_props - np.log2(counts[q, q2]) + d[q2]
                if cand < d[q] - 1e-12:
                    d[q] = cand
                    changed = True
    d[np.isinf(d)] = n_props * n
    return d


def random_dfa_table(rng: random.Random, max_states: int = 8, max_props: int = 3):
    n_props = rng.randint(1, max_props)
    n = rng.randint(1, max_states)
    delta = np.array([[rng.randrange(n) for _ in range(2 ** n_props)] for _ in range(n)], dtype=np.int64)
    accepting = frozenset(q for q in range(n) if rng.random() < 0.3)
    return n_props, delta, accepting


def reachable_states(delta: np.ndarray, start: int, letters) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        q = stack.pop()
        for letter in letters:
            t = int(delta[q, letter])
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def singleton_letters(n_props: int) -> list[int]:
    return [0] + [1 << i for i in range(n_props)]


def words(n_letters: int, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(range(n_letters), repeat=n)


# ---------------------------------------------------------------------------
# deterministic planning in the product graph


def plan_to_acceptance(env, dfa, start, max_steps: int):
    """Shortest action list driving a deterministic env from ``start`` to acceptance.

    Plain BFS over ``(env state, dfa state)``; returns None if acceptance is
    not reachable within ``max_steps``.  Only for noise-free environments.
    """
    tr = {}

    def letter(s):
        lab = env.label(s)
        if lab not in tr:
            tr[lab] = sum(1 << dfa.ap.index(p) for i, p in enumerate(env.ap) if lab >> i & 1)
        return tr[lab]

    acc = set(dfa.accepting)
    q0 = int(dfa.delta[dfa.initial, letter(start)])
    if q0 in acc:
        return []
    parent = {(start, q0): None}
    frontier = [(start, q0)]
    for _ in range(max_steps):
        nxt = []
        for node in frontier:
            s, q = node
            if env.env_done(s):
                continue
            for a in range(env.n_actions):
                (s2, p), = env.outcomes(s, a)
                assert p == 1.0
                q2 = int(dfa.delta[q, letter(s2)])
                child = (s2, q2)
                if child in parent:
                    continue
                parent[child] = (node, a)
                if q2 in acc:
                    actions = []
                    while parent[child] is not None:
                        child, a = parent[child]
                        actions.append(a)
                    return actions[::-1]
                nxt.append(child)
        frontier = nxt
    return None


# ---------------------------------------------------------------------------
# expectimax straight from the environment model


def expectimax(env, dfa, reward_matrix, gamma: float, horizon: int) -> float:
    """Optimal finite-horizon value by memoised recursion over ``env.outcomes``.

    Terminal product states (accepting, trap, environment done) stop
    the recursion.
    """
    acc = set(dfa.accepting)
    reach_acc = _can_accept(dfa)

    def letter(s):
        lab = env.label(s)
        return sum(1 << dfa.ap.index(p) for i, p in enumerate(env.ap) if lab >> i & 1)

    memo = {}

    def v(t, s, q):
        if t == horizon or q in acc or not reach_acc[q] or env.env_done(s):
            return 0.0
        key = (t, s, q)
        if key not in memo:
            best = -math.inf
            for a in range(env.n_actions):
                total = 0.0
                for s2, p in env.outcomes(s, a):
                    q2 = int(dfa.delta[q, letter(s2)])
                    total += p * (reward_matrix[q, q2] + gamma * v(t + 1, s2, q2))
                best = max(best, total)
            memo[key] = best
        return memo[key]

    return sum(p * v(0, s, int(dfa.delta[dfa.initial, letter(s)])) for s, p in env.initial_distribution())


def _can_accept(dfa) -> list[bool]:
    good = set(dfa.accepting)
    changed = True
    while changed:
        changed = False
        for q in dfa.states:
            if q not in good and any(int(t) in good for t in dfa.delta[q]):
                good.add(q)
                changed = True
    return [q in good for q in dfa.states]
