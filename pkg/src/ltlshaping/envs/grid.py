"""Flag gridworlds read from ASCII maps.

Map format, one row per line::

    .  empty        #  wall        A  start
    a..z   consumable flag for proposition of that letter
    A..Z   persistent flag (except 'A', the start) for the lower-case proposition

Cells are ``(row, col)`` with ``(0, 0)`` the top-left character; the grid
cell written g(i, j) with 1-based indices is ``(i - 1, j - 1)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .base import EnvError, LabeledEnv, merge_outcomes

UP, DOWN, LEFT, RIGHT = range(4)
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}
PERPENDICULAR = {UP: (LEFT, RIGHT), DOWN: (LEFT, RIGHT), LEFT: (UP, DOWN), RIGHT: (UP, DOWN)}
DEFAULT_NOISE = 0.1


@dataclass(frozen=True)
class GridMap:
    height: int
    width: int
    walls: frozenset
    start: tuple[int, int]
    flags: dict  # cell -> (proposition, consumable)

    @property
    def props(self) -> tuple[str, ...]:
        return tuple(sorted({p for p, _ in self.flags.values()}))

    def passable(self, cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and cell not in self.walls

    def flag_cells(self, prop: str) -> list[tuple[int, int]]:
        return sorted(cell for cell, (p, _) in self.flags.items() if p == prop)

    def render(self) -> str:
        rows = []
        for r in range(self.height):
            row = []
            for c in range(self.width):
                cell = (r, c)
                if cell == self.start:
                    row.append("A")
                elif cell in self.walls:
                    row.append("#")
                elif cell in self.flags:
                    p, consumable = self.flags[cell]
                    row.append(p if consumable else p.upper())
                else:
                    row.append(".")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"

    def __hash__(self):
        return hash(self.render())


def parse_map(text: str) -> GridMap:
    lines = [ln.rstrip("\n\r") for ln in text.strip("\n").splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise EnvError("empty map")
    width = len(lines[0])
    walls = set()
    flags = {}
    start = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise EnvError(f"map row {r} has width {len(line)}, expected {width}")
        for c, ch in enumerate(line):
            if ch == ".":
                continue
            if ch == "#":
                walls.add((r, c))
            elif ch == "A":
                if start is not None:
                    raise EnvError("map has more than one start cell")
                start = (r, c)
            elif ch.isalpha() and ch.isascii():
                flags[(r, c)] = (ch.lower(), ch.islower())
            else:
                raise EnvError(f"unknown map character {ch!r} at row {r}, column {c}")
    if start is None:
        raise EnvError("map has no start cell 'A'")
    return GridMap(len(lines), width, frozenset(walls), start, flags)


def load_map(name_or_path) -> GridMap:
    """Read a map file, or a bundled map by name (e.g. ``"example3"``)."""
    path = Path(name_or_path)
    if path.exists():
        return parse_map(path.read_text())
    name = str(name_or_path)
    if not name.endswith(".map"):
        name += ".map"
    try:
        text = resources.files("ltlshaping.envs").joinpath("maps", name).read_text()
    except FileNotFoundError:
        raise EnvError(f"no map file or bundled map named {name_or_path!r}") from None
    return parse_map(text)


def bfs_distance(m: GridMap, source, target, avoid=()) -> float:
    """Shortest move count from ``source`` to ``target`` never entering ``avoid``."""
    avoid = set(avoid) - {target}
    if source == target:
        return 0
    seen = {source}
    queue = deque([(source, 0)])
    while queue:
        (r, c), d = queue.popleft()
        for dr, dc in MOVES.values():
            nxt = (r + dr, c + dc)
            if nxt in seen or nxt in avoid or not m.passable(nxt):
                continue
            if nxt == target:
                return d + 1
            seen.add(nxt)
            queue.append((nxt, d + 1))
    return math.inf


def verify_map(m: GridMap, constraints) -> list[dict]:
    """Check ``(source, target, avoid, required)`` BFS constraints; one row each."""
    report = []
    for source, target, avoid, required in constraints:
        actual = bfs_distance(m, tuple(source), tuple(target), [tuple(a) for a in avoid])
        report.append(
            {
                "from": tuple(source),
                "to": tuple(target),
                "avoid": sorted(tuple(a) for a in avoid),
                "required": required,
                "actual": actual,
                "ok": actual == required,
            }
        )
    return report


def example3_constraints(m: GridMap) -> list[tuple]:
    """Step counts of the flag task: blue at g(2,1) in 10, yellow in 5,
    orange in 16 avoiding yellow, then blue at g(6,5) 4 steps after orange."""
    yellow = m.flag_cells("y")
    orange = m.flag_cells("o")[0]
    blue_far, blue_near = (1, 0), (5, 4)
    flags = set(m.flags)
    return [
        (m.start, blue_far, flags - {blue_far}, 10),
        (m.start, yellow[0], flags - set(yellow), 5),
        (m.start, orange, flags - {orange}, 16),
        (orange, blue_near, flags - {blue_near}, 4),
    ]


class FlagGridEnv(LabeledEnv):
    """Four-action gridworld; state is ``(row, col, collected_mask, fresh)``.

    ``fresh`` marks the step on which a consumable flag was collected, so the
    label is a function of the state alone.
    """

    action_names = ("up", "down", "left", "right")

    def __init__(self, grid: GridMap, noise: float = 0.0, horizon: int = 25, ap=None, seed=None):
        super().__init__(seed)
        if not 0.0 <= noise < 1.0:
            raise EnvError(f"noise must lie in [0, 1), got {noise}")
        if grid.start in grid.flags or grid.start in grid.walls:
            raise EnvError("start cell must be empty")
        self.grid = grid
        self.noise = float(noise)
        self.horizon = int(horizon)
        self.ap = tuple(ap) if ap is not None else grid.props
        missing = set(grid.props) - set(self.ap)
        if missing:
            raise EnvError(f"map propositions {sorted(missing)} missing from ap {self.ap}")
        self._bit = {p: 1 << i for i, p in enumerate(self.ap)}
        self._consumable = sorted(cell for cell, (_, cons) in grid.flags.items() if cons)
        self._slot = {cell: i for i, cell in enumerate(self._consumable)}

    def initial_distribution(self):
        r, c = self.grid.start
        return [((r, c, 0, 0), 1.0)]

    def _move(self, r, c, action):
        dr, dc = MOVES[action]
        if self.grid.passable((r + dr, c + dc)):
            return r + dr, c + dc
        return r, c

    def _enter(self, r, c, mask, moved):
        slot = self._slot.get((r, c))
        if moved and slot is not None and not mask >> slot & 1:
            return (r, c, mask | 1 << slot, 1)
        return (r, c, mask, 0)

    def outcomes(self, state, action):
        r, c, mask, _ = state
        if self.noise > 0:
            side_a, side_b = PERPENDICULAR[action]
            choices = [(action, 1.0 - self.noise), (side_a, self.noise / 2), (side_b, self.noise / 2)]
        else:
            choices = [(action, 1.0)]
        pairs = []
        for a, p in choices:
            nr, nc = self._move(r, c, a)
            pairs.append((self._enter(nr, nc, mask, (nr, nc) != (r, c)), p))
        return merge_outcomes(pairs)

    def label(self, state) -> int:
        r, c, _, fresh = state
        flag = self.grid.flags.get((r, c))
        if flag is None:
            return 0
        prop, consumable = flag
        if consumable and not fresh:
            return 0
        return self._bit[prop]

    def cell(self, state):
        return state[0], state[1]


def flag_grid(grid, noise: float = 0.0, horizon: int = 25, ap=None, seed=None) -> FlagGridEnv:
    if not isinstance(grid, GridMap):
        grid = load_map(grid)
    return FlagGridEnv(grid, noise=noise, horizon=horizon, ap=ap, seed=seed)
