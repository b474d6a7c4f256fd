"""On-the-fly product of a labelled environment with a task DFA."""

from __future__ import annotations

import enum

import numpy as np

from .dfa import Dfa, DfaAnalysis, analyze


class Status(str, enum.Enum):
    RUNNING = "running"
    ACCEPTED = "accepted"
    TRAPPED = "trapped"
    HORIZON = "horizon"
    ENV_DONE = "env_done"

    @property
    def terminal(self) -> bool:
        return self is not Status.RUNNING


class SessionError(RuntimeError):
    pass


def letter_translation(env_ap, dfa_ap) -> np.ndarray:
    """Table mapping environment letters to DFA letters (propositions matched by name)."""
    env_ap, dfa_ap = tuple(env_ap), tuple(dfa_ap)
    missing = set(env_ap) - set(dfa_ap)
    if missing:
        raise ValueError(f"environment propositions {sorted(missing)} not in DFA alphabet {dfa_ap}")
    pos = [dfa_ap.index(p) for p in env_ap]
    table = np.zeros(2 ** len(env_ap), dtype=np.int64)
    for letter in range(len(table)):
        table[letter] = sum(1 << pos[i] for i in range(len(env_ap)) if letter >> i & 1)
    return table


def dfa_status(analysis: DfaAnalysis, q: int, env_done: bool = False) -> Status:
    if q in analysis.accepting:
        return Status.ACCEPTED
    if analysis.is_trap[q]:
        return Status.TRAPPED
    if env_done:
        return Status.ENV_DONE
    return Status.RUNNING


class ProductSession:
    """One episode of the product MDP.

    The DFA starts in ``delta(q0, L(s0))`` and follows ``delta(q, L(s'))``
    after each environment step.  The episode ends on acceptance, on entering
    a trap state, when the environment finishes, or after ``horizon`` steps.
    """

    def __init__(self, env, dfa: Dfa, analysis: DfaAnalysis | None = None, horizon: int | None = None):
        self.env = env
        self.dfa = dfa
        self.analysis = analysis if analysis is not None else analyze(dfa)
        self.horizon = env.horizon if horizon is None else horizon
        self._translate = letter_translation(env.ap, dfa.ap)
        self._delta = dfa.delta
        self.state = None
        self.q = None
        self.t = 0
        self.status = Status.RUNNING

    def reset(self, seed=None):
        s, label = self.env.reset(seed)
        self.state = s
        self.q = int(self._delta[self.dfa.initial, self._translate[label]])
        self.t = 0
        self.status = dfa_status(self.analysis, self.q, self.env.env_done(s))
        return s, self.q

    def step(self, action: int, ctx=None):
        """Advance one step; returns ``((s', q'), reward, status)``."""
        if self.state is None:
            raise SessionError("session not reset")
        if self.status is not Status.RUNNING:
            raise SessionError(f"session already terminated ({self.status.value})")
        s, label, done = self.env.step(action)
        q = self.q
        q2 = int(self._delta[q, self._translate[label]])
        r = float(ctx.matrix[q, q2]) if ctx is not None else 0.0
        self.state, self.q = s, q2
        self.t += 1
        status = dfa_status(self.analysis, q2, done)
        if status is Status.RUNNING and self.t >= self.horizon:
            status = Status.HORIZON
        self.status = status
        return (s, q2), r, status


def session_step(sess: ProductSession, ctx, action: int):
    return sess.step(action, ctx)
