import numpy as np
import pytest

from ltlshaping.dfa import fixture_dfa
from ltlshaping.envs import example_grid, flag_grid, parse_map
from ltlshaping.experiment import EXAMPLE_PATHS, EXAMPLE_VALUES, example_suite
from ltlshaping.metrics import distances, partition
from ltlshaping.oracle import (
    OracleError,
    SymbolicTrajectory,
    best_progression,
    enumerate_product,
    optimal_values,
    policy_evaluation,
    policy_progression,
    reach_probability,
    theorem_check,
    trajectory_policy,
    trajectory_return,
    value_iteration,
)
from ltlshaping.product import ProductSession, Status
from ltlshaping.rewards import advance_round, make_context

from oracles import expectimax

SMALL = """
.b..
.#y.
A.o.
"""


@pytest.fixture(scope="module")
def grid_product():
    return enumerate_product(example_grid(), fixture_dfa())


@pytest.fixture(scope="module")
def small():
    env = flag_grid(parse_map(SMALL), noise=0.2, horizon=8, ap=("o", "b", "y"))
    return env, enumerate_product(env, fixture_dfa(), gamma=0.9)


class TestEnumeration:
    def test_example_grid(self, grid_product):
        p = grid_product
        assert len(p.initial) == 1
        assert p.horizon == 25 and p.n_actions == 4
        assert np.allclose(p.prob.sum(axis=2)[~p.terminal], 1.0)
        assert np.all(p.prob[p.terminal] == 0)

    def test_corridor_size(self):
        from ltlshaping.dfa import compile_formula
        from ltlshaping.ltl import parse

        env = flag_grid(parse_map("A.B"), horizon=5)
        p = enumerate_product(env, compile_formula(parse("F b"), ("b",)))
        assert p.n_states <= 6

    def test_refuses_non_enumerable(self):
        env = example_grid()
        env.enumerable = False
        with pytest.raises(OracleError):
            enumerate_product(env, fixture_dfa())

    def test_bad_gamma(self):
        with pytest.raises(OracleError):
            enumerate_product(example_grid(), fixture_dfa(), gamma=0)


class TestValues:
    @pytest.mark.parametrize("kind", ["progression", "hybrid", "naive", "adaptive_hybrid"])
    def test_value_iteration_matches_expectimax(self, small, kind):
        env, p = small
        ctx = make_context(fixture_dfa(), kind, theta=100)
        if ctx.kind.adaptive:
            ctx = advance_round(ctx, 1)
        _, value = value_iteration(p, ctx)
        assert value == pytest.approx(expectimax(env, fixture_dfa(), ctx.matrix, 0.9, 8), abs=1e-12)

    def test_policy_evaluation_of_optimum(self, small):
        _, p = small
        ctx = make_context(fixture_dfa(), "hybrid")
        policy, value = value_iteration(p, ctx)
        assert policy.shape == (p.horizon, p.n_states)
        assert policy_evaluation(p, policy, ctx) == pytest.approx(value, abs=1e-12)
        assert p.initial_vector() @ optimal_values(p, ctx) == pytest.approx(value, abs=1e-12)

    def test_policy_forms_agree(self, small):
        _, p = small
        ctx = make_context(fixture_dfa(), "progression")
        rng = np.random.default_rng(0)
        table = rng.integers(0, p.n_actions, size=(p.horizon, p.n_states))
        onehot = np.eye(p.n_actions)[table]
        call = lambda t, s, q: int(table[t, p.index(s, q)])  # noqa: E731
        v = policy_evaluation(p, table, ctx)
        assert policy_evaluation(p, onehot, ctx) == pytest.approx(v, abs=1e-12)
        assert policy_evaluation(p, call, ctx) == pytest.approx(v, abs=1e-12)

    def test_uniform_policy_matches_monte_carlo(self, small):
        env, p = small
        ctx = make_context(fixture_dfa(), "hybrid")
        uniform = np.full((p.n_states, p.n_actions), 1 / p.n_actions)
        exact = policy_evaluation(p, uniform, ctx)
        rng = np.random.default_rng(1)
        env.rng = np.random.default_rng(2)
        sess = ProductSession(env, fixture_dfa())
        returns = []
        for _ in range(20000):
            sess.reset()
            total, disc, status = 0.0, 1.0, sess.status
            while status is Status.RUNNING:
                _, r, status = sess.step(int(rng.integers(p.n_actions)), ctx)
                total += disc * r
                disc *= 0.9
            returns.append(total)
        se = np.std(returns) / np.sqrt(len(returns))
        assert abs(np.mean(returns) - exact) < 4 * se

    def test_undefined_policy_is_reported(self, grid_product):
        p = grid_product
        ctx = make_context(fixture_dfa(), "progression")
        with pytest.raises(OracleError, match="undefined"):
            policy_evaluation(p, np.full((p.horizon, p.n_states), -1), ctx)
        with pytest.raises(OracleError, match="shape"):
            policy_evaluation(p, np.zeros((2, 2), dtype=int), ctx)


class TestWorkedExamples:
    def test_symbolic_returns(self):
        dfa = fixture_dfa()
        for name, kind, b1, printed in EXAMPLE_VALUES:
            ctx = make_context(dfa, kind, theta=100)
            if b1 is not None:
                ctx = advance_round(ctx, b1)
            assert trajectory_return(EXAMPLE_PATHS[name][0], ctx, 0.9) == pytest.approx(printed, abs=0.01)

    def test_optimum_dominates_the_examples(self, grid_product):
        ctx = make_context(fixture_dfa(), "progression")
        _, best = value_iteration(grid_product, ctx)
        for name in ("pi1", "pi2"):
            assert best >= trajectory_return(EXAMPLE_PATHS[name][0], ctx, 0.9) - 1e-12

    def test_suite_cross_checks(self):
        rows = example_suite()
        assert len(rows) == 12 and all(r["ok"] for r in rows)

    def test_paths_realise_the_events(self, grid_product):
        p = grid_product
        for name, (tr, actions) in EXAMPLE_PATHS.items():
            pol = trajectory_policy(p, actions)
            i = p.initial[0][0]
            for t in range(tr.length):
                (i, _), = p.outcomes(i, int(pol[t, i]))
            assert p.q[i] == tr.final, name

    def test_validation(self):
        a = make_context(fixture_dfa(), "progression").analysis
        with pytest.raises(OracleError, match="increase"):
            SymbolicTrajectory(0, ((3, 0, 1), (2, 1, 4)), 5).validate(a)
        with pytest.raises(OracleError, match="leaves"):
            SymbolicTrajectory(0, ((3, 1, 4),), 5).validate(a)
        with pytest.raises(OracleError, match="no DFA transition"):
            SymbolicTrajectory(0, ((3, 0, 4),), 5).validate(a)
        with pytest.raises(OracleError, match="horizon"):
            SymbolicTrajectory(0, (), 30).validate(a, 25)
        with pytest.raises(OracleError, match="ends at step"):
            SymbolicTrajectory(0, ((3, 0, 3),), 5).validate(a)


class TestProgression:
    def test_best_progression(self, grid_product):
        part = partition(fixture_dfa(), distances(fixture_dfa(), grid_product.analysis))
        assert best_progression(grid_product, part) == 0
        p = enumerate_product(example_grid("no_orange"), fixture_dfa())
        assert best_progression(p, part) == 1

    def test_both_blue_flags_removed(self):
        m = example_grid().grid
        text = m.render().replace("b", ".")
        env = flag_grid(parse_map(text), horizon=25, ap=("o", "b", "y"))
        p = enumerate_product(env, fixture_dfa())
        part = partition(fixture_dfa(), distances(fixture_dfa(), p.analysis))
        assert best_progression(p, part) == 1

    def test_policy_progression(self, grid_product):
        p = grid_product
        part = partition(fixture_dfa(), distances(fixture_dfa(), p.analysis))
        tr_b = {name: policy_progression(p, part, trajectory_policy(p, acts)) for name, (_, acts) in EXAMPLE_PATHS.items()}
        assert tr_b == {"pi1": 1, "pi2": 0, "pi3": 2}  # the start block counts

    def test_reach_probability(self, grid_product):
        p = grid_product
        prob, _ = reach_probability(p, np.isin(p.q, list(p.dfa.accepting)))
        assert prob == pytest.approx(1.0)
        prob, _ = reach_probability(p, np.zeros(p.n_states, dtype=bool))
        assert prob == 0.0


class TestTheoremCheck:
    @pytest.mark.parametrize("kind", ["adaptive_progression", "adaptive_hybrid"])
    def test_example_grid(self, grid_product, kind):
        r = theorem_check(grid_product, kind=kind, theta=100)
        assert r.success and r.final_b == r.b_star == 0
        assert r.lemma2_ok and r.invariance_ok
        assert r.rounds_used <= r.n_blocks
        assert '"success": true' in r.to_json()

    def test_plain_progression_prefers_the_shortcut(self, grid_product):
        ctx = make_context(fixture_dfa(), "progression")
        policy, _ = value_iteration(grid_product, ctx)
        assert policy_progression(grid_product, ctx.partition, policy) == 1

    def test_small_theta_fails_with_bound(self):
        # blue is one step away, orange-then-blue takes the whole horizon
        env = flag_grid(parse_map("BA" + "." * 40 + "ob"), horizon=42, ap=("o", "b", "y"))
        p = enumerate_product(env, fixture_dfa())
        r = theorem_check(p, kind="adaptive_progression", theta=2, margin=0)
        assert not r.success and r.rounds_used == r.round_cap == 4
        assert [x.b for x in r.rounds] == [1] * 5
        assert r.theta_bound == pytest.approx(65.06, abs=0.01)
        assert "theta should exceed" in r.message
        ok = theorem_check(p, kind="adaptive_progression", theta=r.theta_bound * 1.01, margin=0)
        assert ok.success and ok.rounds_used <= ok.n_blocks

    def test_needs_adaptive_kind(self, grid_product):
        with pytest.raises(OracleError):
            theorem_check(grid_product, kind="progression")
