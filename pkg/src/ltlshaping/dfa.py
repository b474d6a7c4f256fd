"""Good-prefix automata for co-safe LTL formulas.

A :class:`Dfa` stores its transition function as a dense integer table
``delta[q, letter]`` where ``letter`` is a bitmask over ``ap``.  Guard groups
(the set of letters moving ``q`` to ``q'``) are recovered on demand, which
keeps transition multiplicities exact.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ltl import FALSE, TRUE, Formula, atoms, format_letter, progress, props_from_letter, simplify

MAX_AP = 16
DEFAULT_STATE_LIMIT = 10_000


class DfaError(ValueError):
    pass


class StateLimitExceeded(DfaError):
    pass


@dataclass(frozen=True, eq=False)
class Dfa:
    ap: tuple[str, ...]
    delta: np.ndarray  # shape (n_states, 2**len(ap)), int
    initial: int
    accepting: frozenset[int]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=np.int64)
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "ap", tuple(self.ap))
        object.__setattr__(self, "accepting", frozenset(int(q) for q in self.accepting))
        n = delta.shape[0]
        if len(self.ap) > MAX_AP:
            raise DfaError(f"|AP| = {len(self.ap)} exceeds explicit-alphabet limit {MAX_AP}")
        if delta.ndim != 2 or delta.shape[1] != 2 ** len(self.ap):
            raise DfaError(f"transition table shape {delta.shape} does not match |AP| = {len(self.ap)}")
        if n == 0 or not 0 <= self.initial < n:
            raise DfaError("initial state out of range")
        if delta.size and (delta.min() < 0 or delta.max() >= n):
            raise DfaError("transition target out of range")
        if any(not 0 <= q < n for q in self.accepting):
            raise DfaError("accepting state out of range")

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def n_letters(self) -> int:
        return self.delta.shape[1]

    @property
    def states(self) -> range:
        return range(self.n_states)

    def step(self, q: int, letter: int) -> int:
        return int(self.delta[q, letter])

    def run(self, letters, q=None) -> int:
        q = self.initial if q is None else q
        for letter in letters:
            q = int(self.delta[q, letter])
        return q

    def accepts(self, letters) -> bool:
        return self.run(letters) in self.accepting

    def guards(self, q: int) -> dict[int, list[int]]:
        """Map each successor of ``q`` to the sorted letters leading there."""
        out: dict[int, list[int]] = {}
        for letter, target in enumerate(self.delta[q]):
            out.setdefault(int(target), []).append(letter)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Dfa)
            and self.ap == other.ap
            and self.initial == other.initial
            and self.accepting == other.accepting
            and np.array_equal(self.delta, other.delta)
        )

    def __hash__(self):
        return hash((self.ap, self.initial, self.accepting, self.delta.tobytes()))

    def __repr__(self):
        return f"Dfa(ap={self.ap}, states={self.n_states}, initial={self.initial}, accepting={sorted(self.accepting)})"


def step(d: Dfa, q: int, letter: int) -> int:
    return d.step(q, letter)


# ---------------------------------------------------------------------------
# construction


def compile_formula(f: Formula, ap, *, max_states: int = DEFAULT_STATE_LIMIT, minimal: bool = False) -> Dfa:
    """Explore residuals of ``f`` under progression over every letter of ``2^ap``.

    The ``true`` residual accepts.  Residuals that are valid without being
    syntactically ``true`` (every continuation reaches ``true``) also accept,
    so the automaton recognises exactly the good prefixes.
    """
    ap = tuple(ap)
    if len(ap) > MAX_AP:
        raise DfaError(f"|AP| = {len(ap)} exceeds explicit-alphabet limit {MAX_AP}")
    unknown = atoms(f) - set(ap)
    if unknown:
        raise DfaError(f"formula uses atoms {sorted(unknown)} not declared in {list(ap)}")
    letters = [props_from_letter(m, ap) for m in range(2 ** len(ap))]

    start = simplify(f)
    index = {start: 0}
    residuals = [start]
    rows = []
    queue = deque([start])
    while queue:
        g = queue.popleft()
        row = []
        for props in letters:
            h = progress(g, props)
            if h not in index:
                if len(residuals) >= max_states:
                    raise StateLimitExceeded(
                        f"more than {max_states} residual states; formula too large for explicit construction"
                    )
                index[h] = len(residuals)
                residuals.append(h)
                queue.append(h)
            row.append(index[h])
        rows.append(row)

    delta = np.array(rows, dtype=np.int64)
    accepting = set()
    if TRUE in index:
        accepting = _attractor(delta, {index[TRUE]})
    dfa = Dfa(ap, delta, 0, frozenset(accepting), tuple(str(g) for g in residuals))
    return minimize(dfa) if minimal else dfa


def _attractor(delta, target):
    """States all of whose letters eventually lead into ``target``."""
    inside = set(target)
    changed = True
    while changed:
        changed = False
        for q in range(delta.shape[0]):
            if q not in inside and all(int(t) in inside for t in delta[q]):
                inside.add(q)
                changed = True
    return inside


def _reachable(d: Dfa) -> list[int]:
    order = [d.initial]
    seen = {d.initial}
    i = 0
    while i < len(order):
        for t in d.delta[order[i]]:
            t = int(t)
            if t not in seen:
                seen.add(t)
                order.append(t)
        i += 1
    return order


def minimize(d: Dfa) -> Dfa:
    """Hopcroft partition refinement on the reachable part of a complete DFA.

    States of the result are numbered in breadth-first order from the initial
    state, so equal languages give identical tables.
    """
    reach = _reachable(d)
    old_to_new = {q: i for i, q in enumerate(reach)}
    delta = np.array([[old_to_new[int(t)] for t in d.delta[q]] for q in reach], dtype=np.int64)
    n, k = delta.shape
    acc = frozenset(old_to_new[q] for q in d.accepting if q in old_to_new)

    # inverse transitions per letter
    inverse = [[[] for _ in range(n)] for _ in range(k)]
    for q in range(n):
        for a in range(k):
            inverse[a][delta[q, a]].append(q)

    blocks = [b for b in (set(acc), set(range(n)) - acc) if b]
    block_of = [0] * n
    for bi, b in enumerate(blocks):
        for q in b:
            block_of[q] = bi
    work = {min(range(len(blocks)), key=lambda i: len(blocks[i]))} if len(blocks) == 2 else set()
    while work:
        splitter = set(blocks[work.pop()])
        for a in range(k):
            pre = set()
            for q in splitter:
                pre.update(inverse[a][q])
            touched = {block_of[q] for q in pre}
            for bi in touched:
                block = blocks[bi]
                inter = block & pre
                if len(inter) == len(block):
                    continue
                rest = block - inter
                blocks[bi] = inter
                blocks.append(rest)
                new = len(blocks) - 1
                for q in rest:
                    block_of[q] = new
                if bi in work:
                    work.add(new)
                else:
                    work.add(bi if len(inter) <= len(rest) else new)

    # renumber blocks breadth-first from the initial block
    start = block_of[0]
    order = [start]
    number = {start: 0}
    i = 0
    rep = {bi: min(b) for bi, b in enumerate(blocks)}
    while i < len(order):
        q = rep[order[i]]
        for a in range(k):
            b = block_of[delta[q, a]]
            if b not in number:
                number[b] = len(order)
                order.append(b)
        i += 1
    new_delta = np.array(
        [[number[block_of[delta[rep[b], a]]] for a in range(k)] for b in order], dtype=np.int64
    )
    new_acc = frozenset(number[block_of[q]] for q in acc)
    labels = None
    if d.labels is not None:
        labels = tuple(d.labels[reach[rep[b]]] for b in order)
    return Dfa(d.ap, new_delta, 0, new_acc, labels)


# ---------------------------------------------------------------------------
# analysis


@dataclass(frozen=True, eq=False)
class DfaAnalysis:
    """Transition multiplicities and reachability facts of a :class:`Dfa`.

    ``counts[q, q']`` is the number of letters taking ``q`` to ``q'``;
    ``reach[q, q']`` is true when ``q'`` is reachable from ``q`` (reflexively).
    """

    n_props: int
    counts: np.ndarray
    reach: np.ndarray
    accepting: frozenset[int]
    reaches_accepting: np.ndarray
    is_trap: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.counts.shape[0]

    def successors(self, q: int) -> list[int]:
        return [int(t) for t in np.flatnonzero(self.counts[q])]

    def count(self, q: int, q2: int) -> int:
        return int(self.counts[q, q2])

    def reachable(self, q: int, q2: int) -> bool:
        return bool(self.reach[q, q2])


def analyze(d: Dfa) -> DfaAnalysis:
    n = d.n_states
    counts = np.zeros((n, n), dtype=np.int64)
    for q in range(n):
        np.add.at(counts[q], d.delta[q], 1)
    adj = counts > 0
    reach = np.eye(n, dtype=bool)
    for q in range(n):
        stack = [q]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(adj[u]):
                if not reach[q, v]:
                    reach[q, v] = True
                    stack.append(int(v))
    acc = np.zeros(n, dtype=bool)
    acc[list(d.accepting)] = True
    reaches = (reach & acc[None, :]).any(axis=1)
    for arr in (counts, reach, reaches):
        arr.setflags(write=False)
    trap = ~reaches
    trap.setflags(write=False)
    return DfaAnalysis(len(d.ap), counts, reach, d.accepting, reaches, trap)


# ---------------------------------------------------------------------------
# serialisation


def to_json(d: Dfa, indent: int | None = 2) -> str:
    edges = []
    for q in d.states:
        for target, letters in sorted(d.guards(q).items()):
            edges.append({"from": q, "letters": letters, "to": target})
    doc = {
        "ap": list(d.ap),
        "states": d.n_states,
        "initial": d.initial,
        "accepting": sorted(d.accepting),
        "edges": edges,
    }
    if d.labels is not None:
        doc["labels"] = list(d.labels)
    return json.dumps(doc, indent=indent)


def from_json(data) -> Dfa:
    """Load a DFA document (str, bytes or already-decoded dict)."""
    if isinstance(data, (str, bytes, bytearray)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise DfaError(f"malformed DFA document: {exc}") from None
    else:
        doc = data
    try:
        ap = [str(p) for p in doc["ap"]]
        n = int(doc["states"])
        initial = int(doc["initial"])
        accepting = [int(q) for q in doc["accepting"]]
        edges = doc["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DfaError(f"malformed DFA document: missing or invalid field {exc}") from None
    k = 2 ** len(ap)
    delta = np.full((n, k), -1, dtype=np.int64)
    for e in edges:
        q, t = int(e["from"]), int(e["to"])
        if not (0 <= q < n and 0 <= t < n):
            raise DfaError(f"edge {e} references a state outside 0..{n - 1}")
        for letter in e["letters"]:
            letter = int(letter)
            if not 0 <= letter < k:
                raise DfaError(f"letter {letter} outside alphabet of size {k}")
            if delta[q, letter] != -1:
                raise DfaError(f"state {q} has two transitions on letter {format_letter(letter, ap)}")
            delta[q, letter] = t
    missing = np.argwhere(delta < 0)
    if len(missing):
        q, letter = missing[0]
        raise DfaError(
            f"transition function not total: state {q} has no move on letter {format_letter(int(letter), ap)}"
            f" ({len(missing)} missing)"
        )
    labels = tuple(doc["labels"]) if doc.get("labels") else None
    return Dfa(tuple(ap), delta, initial, frozenset(accepting), labels)


def to_dot(d: Dfa, name: str = "dfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in d.states:
        shape = "doublecircle" if q in d.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="q{q}"];')
    lines.append(f"  __start -> q{d.initial};")
    for q in d.states:
        for target, letters in sorted(d.guards(q).items()):
            label = " ".join(format_letter(a, d.ap) for a in letters)
            lines.append(f'  q{q} -> q{target} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# hand-specified automaton for the orange/blue/yellow flag task

FLAG_AP = ("o", "b", "y")


def fixture_dfa() -> Dfa:
    """Five-state automaton for "collect o and b in any order, never y".

    q0 start, q1 has o, q2 has b, q3 trap, q4 accepting.  Any letter containing
    ``o`` moves q0 to q1, so q0 -> q1 is satisfied by 4 of the 8 letters.
    """
    o, b, y = 1, 2, 4
    rows = []
    row = []
    for letter in range(8):
        if letter & o:
            row.append(1)
        elif letter & y:
            row.append(3)
        elif letter == b:
            row.append(2)
        else:
            row.append(0)
    rows.append(row)
    rows.append([4 if letter & b else 3 if letter & y else 1 for letter in range(8)])
    rows.append([4 if letter & o else 3 if letter & y else 2 for letter in range(8)])
    rows.append([3] * 8)
    rows.append([4] * 8)
    labels = ("init", "have o", "have b", "trap", "done")
    return Dfa(FLAG_AP, np.array(rows), 0, frozenset({4}), labels)


__all__ = [
    "Dfa",
    "DfaAnalysis",
    "DfaError",
    "StateLimitExceeded",
    "analyze",
    "compile_formula",
    "fixture_dfa",
    "from_json",
    "minimize",
    "step",
    "to_dot",
    "to_json",
]
