"""Trial runner, CSV/JSON outputs and oracle suites driven by a config."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .config import AUTO, ConfigError, ExperimentConfig, with_override
from .dfa import Dfa, compile_formula, fixture_dfa, from_json
from .envs import EXAMPLE_AP, EnvError, example_grid, make_env
from .harness import AdaptiveSchedule, QConfig, default_rewarder, evaluate, train
from .ltl import parse
from .oracle import SymbolicTrajectory, enumerate_product, policy_evaluation, theorem_check, trajectory_policy, trajectory_return
from .rewards import advance_round, make_context

WORKERS_ENV = "LTLSHAPING_WORKERS"
CSV_COLUMNS = ("trial", "step", "episodes", "success_rate", "norm_return", "empirical_b", "round_k")


def build_dfa(cfg: ExperimentConfig) -> Dfa:
    if cfg.automaton == "fixture":
        return fixture_dfa()
    if cfg.automaton is not None:
        return from_json(Path(cfg.resolve(cfg.automaton)).read_text())
    return compile_formula(parse(cfg.formula, cfg.ap), cfg.ap, minimal=True)


def build_env(cfg: ExperimentConfig, seed=None):
    e = cfg.env
    map_path = None
    if e.map is not None:
        resolved = cfg.resolve(e.map)
        map_path = resolved if Path(resolved).exists() else e.map
    env = make_env(e.name, e.variant, e.noise, e.horizon, map_path, seed)
    if not e.enumerable:
        env.enumerable = False
    return env


def _context(cfg: ExperimentConfig, dfa: Dfa):
    theta = None if cfg.reward.theta == AUTO else float(cfg.reward.theta)
    return make_context(dfa, cfg.reward.kind, eta0=cfg.reward.eta0, theta=theta)


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1)[0])


def run_trial(cfg: ExperimentConfig, index: int) -> dict:
    """One independent training run; returns its log rows and final metrics."""
    dfa = build_dfa(cfg)
    env = build_env(cfg)
    ctx = _context(cfg, dfa)
    ln = cfg.learner
    sched = AdaptiveSchedule(None if cfg.schedule.interval == AUTO else cfg.schedule.interval, cfg.schedule.threshold, cfg.schedule.eval_episodes)
    qcfg = QConfig(ln.alpha, ln.epsilon, ln.gamma, ln.epsilon_final, ln.reset_on_round)
    seed = trial_seed(ln.seed, index)
    rewarder = default_rewarder(env, dfa, ctx.partition)
    qt, log, final_ctx = train(env, dfa, ctx, sched, qcfg, ln.budget, seed, ln.eval_every, ln.eval_episodes, rewarder)
    final = None
    if ln.budget > 0:
        final = evaluate(env, dfa, qt, ln.final_eval_episodes, rewarder, ctx.partition, seed=seed, analysis=ctx.analysis)
    return {
        "trial": index,
        "seed": seed,
        "records": log.records,
        "rounds": log.rounds,
        "statuses": log.statuses,
        "final": final,
        "context": final_ctx.summary(),
        "qtable": [[list(_flatten(k)), v] for k, v in sorted(qt.values.items(), key=lambda kv: repr(kv[0]))],
    }


def _flatten(key):
    (s, q) = key
    return [*s, q] if isinstance(s, tuple) else [s, q]


def _workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


def run_trials(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    n = _workers(workers)
    indices = range(cfg.learner.trials)
    if n == 1 or cfg.learner.trials == 1:
        return [run_trial(cfg, i) for i in indices]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(run_trial, itertools.repeat(cfg), indices))


def provenance(cfg: ExperimentConfig) -> str:
    return f"# ltlshaping {__version__} config_sha256={cfg.digest()} name={cfg.name}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 10))
    return str(v)


def trial_csv(result: dict, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in result["records"]:
        w.writerow([result["trial"]] + [_fmt(rec[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def merged_csv(results: list[dict], header: str) -> str:
    parts = [trial_csv(results[0] if results else {"trial": 0, "records": []}, header)]
    for r in results[1:]:
        body = trial_csv(r).split("\n", 1)[1]
        parts.append(body)
    return "".join(parts)


def confidence_interval(values, level: float = 0.95) -> tuple[float, float, float]:
    """Mean and Student-t interval; degenerate for fewer than two values."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, mean, mean
    half = float(stats.t.ppf(0.5 + level / 2, arr.size - 1) * arr.std(ddof=1) / math.sqrt(arr.size))
    return mean, mean - half, mean + half


def summarize(cfg: ExperimentConfig, results: list[dict]) -> dict:
    finals = [r["final"] for r in results if r["final"] is not None]
    out = {"name": cfg.name, "version": __version__, "config_sha256": cfg.digest(), "trials": len(results)}
    for key in ("success_rate", "norm_return"):
        if not finals:
            out[key] = {"mean": None, "ci95": [None, None]}
            continue
        mean, lo, hi = confidence_interval([f[key] for f in finals])
        out[key] = {"mean": mean, "ci95": [lo, hi]}
    out["empirical_b"] = [f["empirical_b"] for f in finals]
    out["rounds"] = [len(r["rounds"]) for r in results]
    return out


def write_outputs(cfg: ExperimentConfig, results: list[dict], out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    header = provenance(cfg)
    trials_dir = out_dir / "trials"
    trials_dir.mkdir(exist_ok=True)
    for r in results:
        (trials_dir / f"trial_{r['trial']:03d}.csv").write_text(trial_csv(r, header))
        (trials_dir / f"qtable_{r['trial']:03d}.json").write_text(json.dumps({"header": header, "entries": r["qtable"]}))
    (out_dir / "metrics.csv").write_text(merged_csv(results, header))
    audit = {
        "provenance": header,
        "trials": [{"trial": r["trial"], "seed": r["seed"], "rounds": r["rounds"], "context": r["context"], "statuses": r["statuses"]} for r in results],
    }
    (out_dir / "rounds.json").write_text(json.dumps(audit, indent=2, sort_keys=True) + "\n")
    summary = summarize(cfg, results)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True, default=list) + "\n")
    return summary


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None) -> dict:
    results = run_trials(cfg, workers)
    return write_outputs(cfg, results, Path(out_dir or cfg.resolve(cfg.output)))


def sweep_configs(cfg: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    if not cfg.sweep:
        return [(cfg.name, cfg)]
    keys = sorted(cfg.sweep)
    out = []
    for combo in itertools.product(*(cfg.sweep[k] for k in keys)):
        variant = cfg
        label = []
        for k, v in zip(keys, combo):
            variant = with_override(variant, k, v)
            label.append(f"{k.split('.')[-1]}={v}")
        name = f"{cfg.name}_{'_'.join(label)}"
        out.append((name, replace(variant, name=name, sweep={})))
    return out


def run_sweep(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None) -> dict:
    root = Path(out_dir or cfg.resolve(cfg.output))
    summaries = {}
    for name, variant in sweep_configs(cfg):
        summaries[name] = run_experiment(variant, root / name, workers)
    (root / "sweep_summary.json").write_text(json.dumps(summaries, indent=2, sort_keys=True) + "\n")
    return summaries


# ---------------------------------------------------------------------------
# oracle suites

# (policy, kind, round-1 block or None for round 0, printed value)
EXAMPLE_VALUES = (
    ("pi1", "progression", None, 0.39),
    ("pi2", "progression", None, 0.34),
    ("pi3", "progression", None, 0.0),
    ("pi1", "hybrid", None, -1.15),
    ("pi2", "hybrid", None, -1.33),
    ("pi3", "hybrid", None, -0.69),
    ("pi1", "adaptive_progression", 1, 0.39),
    ("pi2", "adaptive_progression", 1, 13.85),
    ("pi3", "adaptive_progression", 1, 0.0),
    ("pi1", "adaptive_hybrid", 1, -0.52),
    ("pi2", "adaptive_hybrid", 1, 12.97),
    ("pi3", "adaptive_hybrid", 1, -0.35),
)
EXAMPLE_TOL = 0.01
EXAMPLE_THETA = 100.0

_U, _D, _L, _R = range(4)
EXAMPLE_PATHS = {
    "pi1": (SymbolicTrajectory(0, ((10, 0, 2),), 25), [_L] * 4 + [_U] * 6 + [_L] * 15),
    "pi2": (SymbolicTrajectory(0, ((16, 0, 1), (20, 1, 4)), 20), [_R, _R] + [_U] * 7 + [_L] * 4 + [_D, _D, _R, _D, _D, _D, _R]),
    "pi3": (SymbolicTrajectory(0, ((5, 0, 3),), 5), [_L] * 4 + [_D]),
}


def example_suite(gamma: float = 0.9) -> list[dict]:
    """The twelve worked-example returns, each cross-checked on the enumerated grid."""
    dfa = fixture_dfa()
    product = enumerate_product(example_grid(), dfa, gamma=gamma)
    rows = []
    for name, kind, b1, printed in EXAMPLE_VALUES:
        ctx = make_context(dfa, kind, theta=EXAMPLE_THETA)
        if b1 is not None:
            ctx = advance_round(ctx, b1)
        tr, actions = EXAMPLE_PATHS[name]
        value = trajectory_return(tr, ctx, gamma)
        exact = policy_evaluation(product, trajectory_policy(product, actions), ctx)
        rows.append(
            {
                "policy": name,
                "kind": kind,
                "round": ctx.round,
                "expected": printed,
                "trajectory_return": value,
                "policy_evaluation": exact,
                "ok": abs(value - printed) <= EXAMPLE_TOL and abs(value - exact) <= 1e-9,
            }
        )
    return rows


def oracle_report(cfg: ExperimentConfig) -> dict:
    """Theorem checks for every configured kind, plus the worked examples if asked."""
    try:
        env = build_env(cfg)
    except EnvError as e:
        raise ConfigError(str(e)) from None
    if not env.enumerable:
        raise ConfigError(f"environment {cfg.env.name!r} is not enumerable; exact checks refused")
    dfa = build_dfa(cfg)
    product = enumerate_product(env, dfa, gamma=cfg.learner.gamma)
    report = {"provenance": provenance(cfg), "product_states": product.n_states, "checks": []}
    for kind in cfg.oracle.kinds:
        r = theorem_check(product, None, kind, cfg.oracle.theta, cfg.oracle.eta0, cfg.oracle.margin)
        d = r.to_dict()
        d["ok"] = r.success and r.lemma2_ok and r.invariance_ok
        report["checks"].append({"check": f"theorem:{kind}", **d})
    if cfg.oracle.examples:
        if tuple(dfa.ap) != EXAMPLE_AP:
            raise ConfigError("the worked-example suite needs the flag alphabet (o, b, y)")
        for row in example_suite(cfg.learner.gamma):
            report["checks"].append({"check": f"example:{row['policy']}:{row['kind']}", **row})
    report["ok"] = all(c["ok"] for c in report["checks"])
    return report
