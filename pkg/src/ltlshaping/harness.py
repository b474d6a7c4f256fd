"""Tabular Q-learning over the on-the-fly product, with the adaptive reward loop."""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field

import numpy as np

from .dfa import Dfa, DfaAnalysis, analyze
from .envs.base import SubgoalRewarder
from .metrics import Partition, distances
from .metrics import partition as make_partition
from .product import ProductSession, Status, letter_translation
from .rewards import RewardContext, advance_round

DEFAULT_EVAL_EVERY = 100
DEFAULT_EVAL_EPISODES = 5


@dataclass(frozen=True)
class QConfig:
    alpha: float = 0.1
    epsilon: float = 0.1
    gamma: float = 0.9
    epsilon_final: float | None = None  # linear decay target over the budget
    reset_on_round: bool = False

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class AdaptiveSchedule:
    interval: int | None = None  # N; None means budget / |partition|
    threshold: float = 0.95  # lambda
    eval_episodes: int = 20  # E_eval

    def __post_init__(self):
        if self.interval is not None and self.interval < 1:
            raise ValueError("schedule interval must be at least 1")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be at least 1")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")

    def resolve(self, budget: int, n_blocks: int) -> int:
        if self.interval is not None:
            return self.interval
        return max(1, budget // max(1, n_blocks))


class QTable:
    """Q-values keyed by product state; unseen states read as zeros."""

    def __init__(self, n_actions: int, alpha: float = 0.1, epsilon: float = 0.1, gamma: float = 0.9):
        self.n_actions = n_actions
        self.alpha = alpha
        self.epsilon = epsilon
        self.gamma = gamma
        self.values: dict = {}

    def __len__(self):
        return len(self.values)

    def row(self, key) -> list[float]:
        r = self.values.get(key)
        if r is None:
            r = [0.0] * self.n_actions
            self.values[key] = r
        return r

    def peek(self, key) -> list[float]:
        return self.values.get(key) or [0.0] * self.n_actions

    def greedy(self, key) -> int:
        r = self.values.get(key)
        if r is None:
            return 0
        best = max(r)
        return r.index(best)

    def act(self, key, rng: random.Random, epsilon: float | None = None) -> int:
        """Epsilon-greedy; exploitation ties are broken uniformly at random."""
        eps = self.epsilon if epsilon is None else epsilon
        if rng.random() < eps:
            return rng.randrange(self.n_actions)
        r = self.values.get(key)
        if r is None:
            return rng.randrange(self.n_actions)
        best = max(r)
        ties = [a for a, v in enumerate(r) if v == best]
        return ties[0] if len(ties) == 1 else rng.choice(ties)

    def update(self, key, action: int, reward: float, next_key, terminal: bool) -> None:
        target = reward
        if not terminal:
            nxt = self.values.get(next_key)
            if nxt is not None:
                target += self.gamma * max(nxt)
        r = self.row(key)
        r[action] += self.alpha * (target - r[action])

    def policy(self):
        """Greedy policy as a callable ``(t, state, q) -> action``."""
        return lambda t, s, q: self.greedy((s, q))


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    statuses: dict = field(default_factory=dict)
    episodes: int = 0
    steps: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _block_index(part: Partition, n_states: int) -> list[int]:
    return [int(i) for i in part.index_array(n_states)]


def default_rewarder(env, dfa: Dfa, part: Partition) -> SubgoalRewarder:
    """Sub-goals below the block of the DFA state after the first initial label."""
    tr = letter_translation(env.ap, dfa.ap)
    s0 = env.initial_distribution()[0][0]
    q0 = int(dfa.delta[dfa.initial, tr[env.label(s0)]])
    return SubgoalRewarder.from_partition(part, q0)


def rollout(sess: ProductSession, policy, ctx: RewardContext | None, block: list[int], rewarder: SubgoalRewarder | None = None, gamma: float = 1.0):
    """Run one episode; returns ``(status, min block index, sub-goal return, discounted reward)``."""
    s, q = sess.reset()
    best = block[q]
    sub = rewarder.reset(q) if rewarder is not None else 0.0
    ret = 0.0
    disc = 1.0
    t = 0
    status = sess.status
    while status is Status.RUNNING:
        a = policy(t, s, q)
        (s, q), r, status = sess.step(a, ctx)
        ret += disc * r
        disc *= gamma
        t += 1
        if block[q] < best:
            best = block[q]
        if rewarder is not None:
            sub += rewarder.observe(q)
    return status, best, sub, ret


def evaluate(env, dfa: Dfa, policy, episodes: int, rewarder: SubgoalRewarder | None = None, partition: Partition | None = None, seed=None, analysis: DfaAnalysis | None = None) -> dict:
    """Greedy-rollout metrics: success rate, normalised sub-goal return, empirical b.

    ``policy`` is a :class:`QTable` (played greedily) or a callable
    ``(t, state, q) -> action``.  The environment's own random stream is
    restored afterwards so evaluation does not perturb training.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    if isinstance(policy, QTable):
        policy = policy.policy()
    a = analysis if analysis is not None else analyze(dfa)
    if partition is None:
        partition = make_partition(dfa, distances(dfa, a))
    block = _block_index(partition, dfa.n_states)
    saved = env.rng
    env.rng = np.random.default_rng(seed)
    try:
        sess = ProductSession(env, dfa, a)
        succ = 0
        sub_total = 0.0
        max_total = 0.0
        best = math.inf
        for _ in range(episodes):
            status, b, sub, _ = rollout(sess, policy, None, block, rewarder)
            succ += status is Status.ACCEPTED
            best = min(best, b)
            if rewarder is not None:
                sub_total += sub
                max_total += len(rewarder)
    finally:
        env.rng = saved
    norm = sub_total / max_total if max_total > 0 else float(succ / episodes)
    return {"success_rate": succ / episodes, "norm_return": norm, "empirical_b": int(best)}


def train(
    env,
    dfa: Dfa,
    ctx: RewardContext,
    sched: AdaptiveSchedule | None = None,
    qcfg: QConfig | None = None,
    budget: int = 1000,
    seed=None,
    eval_every: int = DEFAULT_EVAL_EVERY,
    eval_episodes: int = DEFAULT_EVAL_EPISODES,
    rewarder: SubgoalRewarder | None = None,
):
    """Epsilon-greedy Q-learning for ``budget`` episodes; returns ``(qtable, log, ctx)``.

    With an adaptive context, every N episodes the success rate of the last N
    training episodes is compared with the threshold; if it falls short, b_k
    is measured from greedy rollouts and the reward advances one round.
    """
    sched = sched or AdaptiveSchedule()
    qcfg = qcfg or QConfig()
    a = ctx.analysis
    part = ctx.partition
    block = _block_index(part, dfa.n_states)
    interval = sched.resolve(budget, len(part))
    seeds = np.random.SeedSequence(seed)
    env_seed, agent_seed, eval_seed = seeds.spawn(3)
    env.rng = np.random.default_rng(env_seed)
    rng = random.Random(int(agent_seed.generate_state(1)[0]))
    eval_base = int(eval_seed.generate_state(1)[0])
    if rewarder is None:
        rewarder = default_rewarder(env, dfa, part)

    q_table = QTable(env.n_actions, qcfg.alpha, qcfg.epsilon, qcfg.gamma)
    log = TrainingLog()
    sess = ProductSession(env, dfa, a)
    window: list[bool] = []
    matrix = ctx.matrix
    eps0 = qcfg.epsilon
    eps1 = qcfg.epsilon_final if qcfg.epsilon_final is not None else eps0

    for ep in range(budget):
        eps = eps0 + (eps1 - eps0) * ep / max(1, budget - 1)
        s, q = sess.reset()
        key = (s, q)
        status = sess.status
        while status is Status.RUNNING:
            act = q_table.act(key, rng, eps)
            (s2, q2), _, status = sess.step(act)
            r = float(matrix[q, q2])
            nkey = (s2, q2)
            q_table.update(key, act, r, nkey, status.terminal and status is not Status.HORIZON)
            key, q = nkey, q2
            log.steps += 1
        log.episodes += 1
        log.statuses[status.value] = log.statuses.get(status.value, 0) + 1
        window.append(status is Status.ACCEPTED)

        if eval_every and (ep + 1) % eval_every == 0:
            m = evaluate(env, dfa, q_table, eval_episodes, rewarder, part, seed=eval_base + ep, analysis=a)
            log.records.append({"step": log.steps, "episodes": ep + 1, **m, "round_k": ctx.round})

        if (ep + 1) % interval == 0:
            recent = window[-interval:]
            rate = sum(recent) / len(recent)
            window = []
            if ctx.kind.adaptive and rate < sched.threshold:
                m = evaluate(env, dfa, q_table, sched.eval_episodes, None, part, seed=eval_base + budget + ep, analysis=a)
                b_k = m["empirical_b"]
                ctx = advance_round(ctx, b_k)
                matrix = ctx.matrix
                log.rounds.append({"episode": ep + 1, "success_rate": rate, "b_k": b_k, "round_k": ctx.round, "eta_k": ctx.eta})
                if qcfg.reset_on_round:
                    q_table = QTable(env.n_actions, qcfg.alpha, qcfg.epsilon, qcfg.gamma)
    return q_table, log, ctx
