"""Exact computations on enumerated product MDPs.

Everything here is finite-horizon: a policy is a ``(H, n_states)`` array of
actions (or ``(H, n_states, n_actions)`` probabilities) and values are
computed by backward induction over the ``H`` decision stages.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .dfa import Dfa, DfaAnalysis, analyze
from .metrics import Partition
from .product import Status, dfa_status, letter_translation
from .rewards import RewardContext, RewardKind, advance_round, make_context

VALUE_TOL = 1e-9


class OracleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EnumeratedProduct:
    """Reachable part of ``S x Q`` with padded outcome arrays.

    ``succ[i, a, k]`` / ``prob[i, a, k]`` list the outcomes of action ``a`` in
    product state ``i``; padding entries have probability 0.  Terminal states
    have no outgoing outcomes.
    """

    dfa: Dfa
    analysis: DfaAnalysis
    states: tuple
    q: np.ndarray
    succ: np.ndarray
    prob: np.ndarray
    status: tuple
    initial: tuple  # (index, probability) pairs
    horizon: int
    gamma: float
    action_names: tuple = ()

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return self.succ.shape[1]

    @property
    def terminal(self) -> np.ndarray:
        return np.array([s is not Status.RUNNING for s in self.status], dtype=bool)

    def index(self, state, q: int) -> int:
        return self._index[(state, q)]

    def __post_init__(self):
        object.__setattr__(self, "_index", {sq: i for i, sq in enumerate(self.states)})

    def outcomes(self, i: int, a: int) -> list[tuple[int, float]]:
        return [(int(j), float(p)) for j, p in zip(self.succ[i, a], self.prob[i, a]) if p > 0]

    def initial_vector(self) -> np.ndarray:
        v = np.zeros(self.n_states)
        for i, p in self.initial:
            v[i] += p
        return v

    def rewards(self, ctx: RewardContext) -> np.ndarray:
        """Reward of every padded outcome, shape ``(n, A, K)``."""
        m = ctx.matrix
        return m[self.q[:, None, None], self.q[self.succ]]


def enumerate_product(env, dfa: Dfa, gamma: float = 0.9, horizon: int | None = None, analysis: DfaAnalysis | None = None) -> EnumeratedProduct:
    """Explore every product state reachable from the initial distribution."""
    if not getattr(env, "enumerable", False):
        raise OracleError(f"{type(env).__name__} cannot be enumerated")
    if not 0 < gamma <= 1:
        raise OracleError(f"gamma must lie in (0, 1], got {gamma}")
    a = analysis if analysis is not None else analyze(dfa)
    tr = letter_translation(env.ap, dfa.ap)
    delta = dfa.delta
    horizon = env.horizon if horizon is None else int(horizon)
    n_actions = env.n_actions

    index: dict = {}
    states: list = []
    status: list = []
    queue: deque = deque()

    def visit(s, q):
        key = (s, q)
        i = index.get(key)
        if i is None:
            i = len(states)
            index[key] = i
            states.append(key)
            st = dfa_status(a, q, env.env_done(s))
            status.append(st)
            if st is Status.RUNNING:
                queue.append(i)
        return i

    initial: dict = {}
    for s0, p in env.initial_distribution():
        q0 = int(delta[dfa.initial, tr[env.label(s0)]])
        i = visit(s0, q0)
        initial[i] = initial.get(i, 0.0) + p

    edges: dict = {}
    while queue:
        i = queue.popleft()
        s, q = states[i]
        for act in range(n_actions):
            out: dict = {}
            for s2, p in env.outcomes(s, act):
                j = visit(s2, int(delta[q, tr[env.label(s2)]]))
                out[j] = out.get(j, 0.0) + p
            edges[i, act] = out

    n = len(states)
    width = max((len(o) for o in edges.values()), default=1)
    succ = np.zeros((n, n_actions, width), dtype=np.int64)
    prob = np.zeros((n, n_actions, width))
    for (i, act), out in edges.items():
        for k, (j, p) in enumerate(out.items()):
            succ[i, act, k] = j
            prob[i, act, k] = p
    # terminal states: point to themselves so padded lookups stay in range
    for i, st in enumerate(status):
        if st is not Status.RUNNING:
            succ[i] = i
    succ.setflags(write=False)
    prob.setflags(write=False)
    q_arr = np.array([q for _, q in states], dtype=np.int64)
    q_arr.setflags(write=False)
    return EnumeratedProduct(
        dfa, a, tuple(states), q_arr, succ, prob, tuple(status), tuple(sorted(initial.items())), horizon, float(gamma),
        tuple(getattr(env, "action_names", ())),
    )


# ---------------------------------------------------------------------------
# symbolic trajectories


@dataclass(frozen=True)
class SymbolicTrajectory:
    """DFA moves at given timesteps; the DFA self-loops on all other steps.

    ``events`` holds ``(t, source, target)`` with ``t`` the 1-based step on
    which the move happens; ``length`` is the number of steps taken.
    """

    initial: int
    events: tuple[tuple[int, int, int], ...]
    length: int

    def validate(self, analysis: DfaAnalysis | None = None, horizon: int | None = None) -> None:
        q = self.initial
        last = 0
        if self.length < 0:
            raise OracleError("negative trajectory length")
        if horizon is not None and self.length > horizon:
            raise OracleError(f"length {self.length} exceeds horizon {horizon}")
        for t, src, dst in self.events:
            if t <= last:
                raise OracleError(f"event timesteps must strictly increase (got {t} after {last})")
            if t > self.length:
                raise OracleError(f"event at step {t} beyond trajectory length {self.length}")
            if src != q:
                raise OracleError(f"event at step {t} leaves q{src} but the DFA is in q{q}")
            if analysis is not None:
                if analysis.count(src, dst) == 0:
                    raise OracleError(f"no DFA transition q{src} -> q{dst}")
                if dfa_status(analysis, src) is not Status.RUNNING:
                    raise OracleError(f"event at step {t} after the episode ended in q{src}")
                if dfa_status(analysis, dst) is not Status.RUNNING and t != self.length:
                    raise OracleError(f"episode ends at step {t} in q{dst} but length is {self.length}")
            q, last = dst, t

    @property
    def final(self) -> int:
        return self.events[-1][2] if self.events else self.initial


def trajectory_return(tr: SymbolicTrajectory, ctx: RewardContext, gamma: float, horizon: int | None = None) -> float:
    """Discounted sum of per-step rewards, the first step undiscounted."""
    tr.validate(ctx.analysis, horizon)
    m = ctx.matrix
    moves = {t: (src, dst) for t, src, dst in tr.events}
    q = tr.initial
    total = 0.0
    for t in range(1, tr.length + 1):
        if t in moves:
            src, dst = moves[t]
            total += gamma ** (t - 1) * m[src, dst]
            q = dst
        else:
            total += gamma ** (t - 1) * m[q, q]
    return float(total)


# ---------------------------------------------------------------------------
# values


def value_iteration(p: EnumeratedProduct, ctx: RewardContext):
    """Optimal stage policy ``(H, n)`` and its value from the initial distribution."""
    values, policy = _backward(p, ctx)
    return policy, float(p.initial_vector() @ values[0])


def optimal_values(p: EnumeratedProduct, ctx: RewardContext) -> np.ndarray:
    """Stage-0 optimal value of every product state."""
    return _backward(p, ctx)[0][0]


def _backward(p: EnumeratedProduct, ctx: RewardContext):
    H, n = p.horizon, p.n_states
    r = p.rewards(ctx)
    live = ~p.terminal
    values = np.zeros((H + 1, n))
    policy = np.zeros((H, n), dtype=np.int64)
    for t in range(H - 1, -1, -1):
        qv = (p.prob * (r + p.gamma * values[t + 1][p.succ])).sum(axis=2)
        best = np.argmax(qv, axis=1)  # first maximum: lowest-index tie-break
        policy[t] = best
        values[t] = np.where(live, qv[np.arange(n), best], 0.0)
    return values, policy


def _as_distribution(p: EnumeratedProduct, policy) -> np.ndarray:
    """Normalise a policy to stage-indexed action probabilities ``(H, n, A)``.

    Accepts ``(n,)`` or ``(H, n)`` integer actions (``-1`` = undefined),
    ``(n, A)`` or ``(H, n, A)`` float probabilities, or a callable
    ``policy(t, state, q) -> action``.
    """
    H, n, A = p.horizon, p.n_states, p.n_actions
    if callable(policy):
        arr = np.full((H, n), -1, dtype=np.int64)
        cache: dict = {}

        def lookup(t, i):
            if (t, i) not in cache:
                s, q = p.states[i]
                cache[t, i] = int(policy(t, s, q))
            return cache[t, i]

        # fill lazily along reachable states only
        frontier = {i for i, _ in p.initial}
        for t in range(H):
            nxt = set()
            for i in frontier:
                if p.status[i] is not Status.RUNNING:
                    continue
                act = lookup(t, i)
                arr[t, i] = act
                nxt.update(j for j, pr in p.outcomes(i, act))
            frontier = nxt
        policy = arr
    pol = np.asarray(policy)
    if np.issubdtype(pol.dtype, np.integer):
        if pol.ndim == 1:
            pol = np.broadcast_to(pol, (H, n))
        if pol.shape != (H, n):
            raise OracleError(f"policy shape {pol.shape} does not match (H, n) = {(H, n)}")
        dist = np.zeros((H, n, A))
        defined = pol >= 0
        if np.any(pol >= A):
            raise OracleError("policy chooses an out-of-range action")
        t_idx, s_idx = np.nonzero(defined)
        dist[t_idx, s_idx, pol[defined]] = 1.0
        return dist
    pol = pol.astype(float)
    if pol.ndim == 2:
        pol = np.broadcast_to(pol, (H, n, A))
    if pol.shape != (H, n, A):
        raise OracleError(f"stochastic policy shape {pol.shape} does not match {(H, n, A)}")
    return pol


def _check_defined(p: EnumeratedProduct, dist: np.ndarray) -> None:
    occ = p.initial_vector() > 0
    live = ~p.terminal
    for t in range(p.horizon):
        act = occ & live
        mass = dist[t].sum(axis=1)
        bad = np.flatnonzero(act & ~np.isclose(mass, 1.0))
        if bad.size:
            s, q = p.states[bad[0]]
            raise OracleError(f"policy undefined at step {t} on reachable product state {s!r}, q{q}")
        nxt = np.zeros(p.n_states, dtype=bool)
        chosen = (dist[t] > 0)[act]
        reach = p.succ[act][chosen][p.prob[act][chosen] > 0]
        nxt[reach] = True
        occ = nxt


def policy_evaluation(p: EnumeratedProduct, policy, ctx: RewardContext) -> float:
    """Exact expected discounted return of ``policy`` from the initial distribution."""
    dist = _as_distribution(p, policy)
    _check_defined(p, dist)
    r = p.rewards(ctx)
    live = ~p.terminal
    v = np.zeros(p.n_states)
    for t in range(p.horizon - 1, -1, -1):
        qv = (p.prob * (r + p.gamma * v[p.succ])).sum(axis=2)
        v = np.where(live, (dist[t] * qv).sum(axis=1), 0.0)
    return float(p.initial_vector() @ v)


# ---------------------------------------------------------------------------
# progression


def best_progression(p: EnumeratedProduct, part: Partition) -> int:
    """b*: the smallest block index reachable within the horizon under any actions."""
    return _reachable_min(p, part, None)


def policy_progression(p: EnumeratedProduct, part: Partition, policy) -> int:
    """b(pi): the smallest block index reached with positive probability under ``policy``."""
    return _reachable_min(p, part, _as_distribution(p, policy))


def _reachable_min(p: EnumeratedProduct, part: Partition, dist) -> int:
    idx = part.index_array(p.dfa.n_states)[p.q]
    occ = p.initial_vector() > 0
    seen = occ.copy()
    live = ~p.terminal
    for t in range(p.horizon):
        act = occ & live
        if not act.any():
            break
        if dist is None:
            mask = p.prob[act] > 0
            reach = p.succ[act][mask]
        else:
            chosen = dist[t][act] > 0
            probs = p.prob[act] * chosen[:, :, None]
            reach = p.succ[act][probs > 0]
        occ = np.zeros(p.n_states, dtype=bool)
        occ[reach] = True
        occ &= ~seen if dist is None else np.ones_like(occ)
        seen |= occ
    return int(idx[seen].min())


def reach_probability(p: EnumeratedProduct, targets: np.ndarray):
    """Maximal probability of entering ``targets`` within the horizon, and a policy achieving it."""
    H, n = p.horizon, p.n_states
    hit = targets.astype(float)
    stop = p.terminal | targets
    v = np.zeros(n)
    policy = np.zeros((H, n), dtype=np.int64)
    for t in range(H - 1, -1, -1):
        qv = (p.prob * np.where(targets[p.succ], 1.0, v[p.succ])).sum(axis=2)
        best = np.argmax(qv, axis=1)
        policy[t] = best
        v = np.where(stop, hit, qv[np.arange(n), best])
    return float(p.initial_vector() @ v), policy


# ---------------------------------------------------------------------------
# theorem check


@dataclass
class RoundRecord:
    round: int
    eta: float
    value: float
    b: int
    invariance_ok: bool | None = None
    invariance_gap: float | None = None
    lemma2_ok: bool | None = None


@dataclass
class TheoremReport:
    kind: str
    theta: float
    eta0: float
    b_star: int
    n_blocks: int
    round_cap: int
    success: bool
    rounds_used: int
    final_b: int
    rounds: list = field(default_factory=list)
    theta_bound: float | None = None
    message: str = ""

    @property
    def lemma2_ok(self) -> bool:
        return all(r.lemma2_ok is not False for r in self.rounds)

    @property
    def invariance_ok(self) -> bool:
        return all(r.invariance_ok is not False for r in self.rounds)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lemma2_ok"] = self.lemma2_ok
        d["invariance_ok"] = self.invariance_ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if isinstance(o, (np.integer, np.floating)):
        return o.item()
    raise TypeError(type(o))


def _hybrid_slack(p: EnumeratedProduct, ctx: RewardContext) -> float:
    """Largest possible total weight of the self-loop penalty terms over one episode."""
    if not ctx.kind.hybrid:
        return 0.0
    g = p.gamma
    steps = p.horizon if g == 1 else (1 - g ** p.horizon) / (1 - g)
    return steps * ctx.eta * (float(ctx.current.values.max()) + float(ctx.current_progression.max()))


def theta_lower_bound(p: EnumeratedProduct, part: Partition, ctx: RewardContext, policy, b: int) -> float:
    """sigma / (p_min * gamma**(H-1)): return gap over the best path probability into a better block."""
    idx = part.index_array(p.dfa.n_states)[p.q]
    targets = idx < b
    prob, reach_pol = reach_probability(p, targets)
    if prob <= 0:
        return math.inf
    sigma = max(0.0, policy_evaluation(p, policy, ctx) - policy_evaluation(p, reach_pol, ctx))
    return sigma / (prob * p.gamma ** (p.horizon - 1))


def theorem_check(
    p: EnumeratedProduct,
    part: Partition | None = None,
    kind: RewardKind | str = RewardKind.ADAPTIVE_PROGRESSION,
    theta: float = 100.0,
    eta0: float = 0.1,
    margin: int | None = None,
    tol: float = VALUE_TOL,
) -> TheoremReport:
    """Run the adaptive loop with exact optimal policies until b(pi*_k) = b*.

    At every update the round-k optimum is re-evaluated under round k+1.
    For progression rewards its value must not change; for hybrid rewards
    it may move by at most the self-loop penalty slack of both rounds.  If
    some policy does strictly better than that slack under round k+1, the
    round-(k+1) optimum must reach a strictly better block.
    """
    kind = RewardKind(kind)
    if not kind.adaptive:
        raise OracleError(f"theorem_check needs an adaptive reward kind, got {kind.value}")
    ctx = make_context(p.dfa, kind, eta0=eta0, theta=theta, analysis=p.analysis)
    part = ctx.partition if part is None else part
    n_blocks = len(part)
    cap = n_blocks + (2 * n_blocks if margin is None else int(margin))
    b_star = best_progression(p, part)

    policy, value = value_iteration(p, ctx)
    b = policy_progression(p, part, policy)
    records = [RoundRecord(ctx.round, ctx.eta, value, b)]
    report = TheoremReport(kind.value, float(ctx.theta), eta0, b_star, n_blocks, cap, False, 0, b, records)
    while b != b_star:
        if report.rounds_used >= cap:
            report.theta_bound = theta_lower_bound(p, part, ctx, policy, b)
            report.message = (
                f"no convergence within {cap} rounds (b={b}, b*={b_star}); "
                f"theta should exceed {report.theta_bound:.6g}"
            )
            return report
        nxt = advance_round(ctx, b)
        old_now = policy_evaluation(p, policy, nxt)
        slack = _hybrid_slack(p, ctx) + _hybrid_slack(p, nxt)
        gap = abs(old_now - value)
        records[-1].invariance_gap = gap
        records[-1].invariance_ok = gap <= slack + tol * max(1.0, abs(value))
        new_policy, new_value = value_iteration(p, nxt)
        new_b = policy_progression(p, part, new_policy)
        if new_value > old_now + slack + tol * max(1.0, abs(old_now)):
            records[-1].lemma2_ok = new_b < b
        ctx, policy, value, b = nxt, new_policy, new_value, new_b
        records.append(RoundRecord(ctx.round, ctx.eta, value, b))
        report.rounds_used += 1
    report.success = True
    report.final_b = b
    report.message = f"b(pi*) = b* = {b_star} after {report.rounds_used} round(s)"
    return report


def trajectory_policy(p: EnumeratedProduct, actions, start=None) -> np.ndarray:
    """Stage policy that plays ``actions`` along the (deterministic) path they induce."""
    H, n = p.horizon, p.n_states
    pol = np.full((H, n), -1, dtype=np.int64)
    if start is None:
        if len(p.initial) != 1:
            raise OracleError("trajectory policies need a single initial state")
        start = p.initial[0][0]
    i = start
    for t, act in enumerate(actions):
        if t >= H or p.status[i] is not Status.RUNNING:
            break
        pol[t, i] = act
        outs = p.outcomes(i, act)
        if len(outs) != 1:
            raise OracleError("trajectory policies need deterministic transitions")
        i = outs[0][0]
    return pol
