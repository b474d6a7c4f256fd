"""Command-line entry point: ``ltlshaping compile|run|evaluate|oracle|sweep``.

Exit codes: 0 success, 1 usage or configuration error, 2 a check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .dfa import DfaError, analyze, compile_formula, fixture_dfa, from_json, to_dot, to_json
from .ltl import FormulaError, atoms, parse

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_spec(path: str) -> tuple[str, tuple[str, ...] | None]:
    """Formula text plus an optional ``ap:`` line; ``#`` starts a comment line."""
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    ap = None
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if stripped.lower().startswith("ap:"):
            ap = tuple(stripped[3:].replace(",", " ").split())
            continue
        body.append(line)
    return " ".join(body).strip(), ap


def cmd_compile(args) -> int:
    from .metrics import distances, partition

    if args.formula is not None:
        text, ap = args.formula, None
    elif args.spec is not None:
        text, ap = read_spec(args.spec)
    else:
        text, ap = None, None
    if args.ap:
        ap = tuple(args.ap.replace(",", " ").split())
    try:
        if args.automaton:
            dfa = fixture_dfa() if args.automaton == "fixture" else from_json(Path(args.automaton).read_text())
            if text:
                parse(text, dfa.ap)  # still validate the formula against the automaton's alphabet
        else:
            if not text:
                print("error: no formula given", file=sys.stderr)
                return EXIT_USAGE
            f = parse(text, ap)
            ap = ap or tuple(sorted(atoms(f)))
            dfa = compile_formula(f, ap, minimal=not args.no_minimize)
    except FormulaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DfaError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    a = analyze(dfa)
    d = distances(dfa, a)
    part = partition(dfa, d)
    report = {
        "ap": list(dfa.ap),
        "states": dfa.n_states,
        "initial": dfa.initial,
        "accepting": sorted(dfa.accepting),
        "distances": d.to_dict(),
        "partition": part.to_list(),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "dfa.json").write_text(to_json(dfa) + "\n")
        (out / "dfa.dot").write_text(to_dot(dfa))
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"states: {dfa.n_states}  initial: q{dfa.initial}  accepting: {', '.join(f'q{q}' for q in sorted(dfa.accepting))}")
    print("distances:")
    for q in dfa.states:
        label = f"  ({dfa.labels[q]})" if dfa.labels else ""
        print(f"  q{q}: {_num(d[q])}{label}")
    print("partition:")
    for i, blk in enumerate(part):
        print(f"  B{i} = {{{', '.join(f'q{q}' for q in sorted(blk))}}}")
    return EXIT_OK


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.6g}"


def _load(path):
    try:
        return load_config(path)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return None


def _print_summary(summary: dict) -> None:
    for key in ("success_rate", "norm_return"):
        s = summary[key]
        if s["mean"] is None:
            print(f"{key}: n/a")
        else:
            lo, hi = s["ci95"]
            print(f"{key}: {s['mean']:.4f}  95% CI [{lo:.4f}, {hi:.4f}]")


def cmd_run(args) -> int:
    from .experiment import run_experiment

    cfg = _load(args.config)
    if cfg is None:
        return EXIT_USAGE
    if args.trials is not None or args.budget is not None or args.seed is not None:
        from dataclasses import replace

        ln = cfg.learner
        ln = replace(
            ln,
            trials=args.trials if args.trials is not None else ln.trials,
            budget=args.budget if args.budget is not None else ln.budget,
            seed=args.seed if args.seed is not None else ln.seed,
        )
        cfg = replace(cfg, learner=ln)
    try:
        summary = run_experiment(cfg, args.out, args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{cfg.name}: {summary['trials']} trial(s)")
    _print_summary(summary)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiment import run_sweep

    cfg = _load(args.config)
    if cfg is None:
        return EXIT_USAGE
    if not cfg.sweep:
        print("config error: no 'sweep' section", file=sys.stderr)
        return EXIT_USAGE
    try:
        summaries = run_sweep(cfg, args.out, args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    for name, summary in summaries.items():
        print(f"== {name}")
        _print_summary(summary)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    import random

    from .experiment import build_dfa, build_env
    from .harness import QTable, default_rewarder, evaluate
    from .metrics import distances, partition

    cfg = _load(args.config)
    if cfg is None:
        return EXIT_USAGE
    dfa = build_dfa(cfg)
    env = build_env(cfg)
    part = partition(dfa, distances(dfa, analyze(dfa)))
    if args.qtable:
        try:
            data = json.loads(Path(args.qtable).read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read Q-table: {e}", file=sys.stderr)
            return EXIT_USAGE
        qt = QTable(env.n_actions)
        for key, values in data["entries"]:
            qt.values[(tuple(key[:-1]), key[-1])] = list(values)
        policy = qt
    else:
        rng = random.Random(args.seed)
        policy = lambda t, s, q: rng.randrange(env.n_actions)  # noqa: E731
    m = evaluate(env, dfa, policy, args.episodes, default_rewarder(env, dfa, part), part, seed=args.seed)
    print(json.dumps(m, indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .experiment import oracle_report

    cfg = _load(args.config)
    if cfg is None:
        return EXIT_USAGE
    try:
        report = oracle_report(cfg)
    except ConfigError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(report, indent=2, default=str)
    if args.out:
        Path(args.out).write_text(text + "\n")
    for c in report["checks"]:
        print(f"{'PASS' if c['ok'] else 'FAIL'}  {c['check']}")
    return EXIT_OK if report["ok"] else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ltlshaping", description="LTL task automata and adaptive reward shaping")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a formula to a DFA and print distances and partition")
    c.add_argument("spec", nargs="?", help="file holding the formula (and optionally an 'ap:' line)")
    c.add_argument("-f", "--formula", help="formula text instead of a spec file")
    c.add_argument("--ap", help="atomic propositions, comma or space separated")
    c.add_argument("--automaton", help="analyse this DFA JSON file (or 'fixture') instead of compiling")
    c.add_argument("--no-minimize", action="store_true", help="keep the unminimised automaton")
    c.add_argument("-o", "--out", help="directory for dfa.json, dfa.dot and report.json")
    c.set_defaults(func=cmd_compile)

    for name, func, helptext in (
        ("run", cmd_run, "train all trials of a config"),
        ("sweep", cmd_sweep, "run every combination in a config's sweep section"),
    ):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("config", help="YAML config file or bundled config name")
        r.add_argument("-o", "--out", help="output directory (default: the config's 'output')")
        r.add_argument("-j", "--workers", type=int, help="parallel trials (default: $LTLSHAPING_WORKERS or 1)")
        if name == "run":
            r.add_argument("--trials", type=int)
            r.add_argument("--budget", type=int)
            r.add_argument("--seed", type=int)
        r.set_defaults(func=func)

    e = sub.add_parser("evaluate", help="evaluate a saved Q-table (or a random policy)")
    e.add_argument("config")
    e.add_argument("--qtable", help="qtable_NNN.json written by 'run'; omit for a uniform random policy")
    e.add_argument("--episodes", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("oracle", help="exact checks on the enumerated product")
    o.add_argument("config")
    o.add_argument("-o", "--out", help="write the JSON report here")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if getattr(args, "episodes", 1) < 1:
        print("error: --episodes must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
