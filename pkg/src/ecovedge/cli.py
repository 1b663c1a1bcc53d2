"""Command-line entry point: ``ecovedge run|resume|evaluate|oracle|report|catalog``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ecovedge.actions import catalog_count_bruteforce, raw_cardinality
from ecovedge.config import ConfigError, get_preset, load_config
from ecovedge.env import Environment
from ecovedge.evaluation import EqualPowerPolicy, LearnedPolicy, OraclePolicy, RandomPowerPolicy, evaluate
from ecovedge.harness import aggregate, load_plan, resume, run_plan
from ecovedge.learning import ArtifactError, load_artifact
from ecovedge.metrics import SUMMARY_HEADER, summarize, summary_row, write_episode_logs


def _summary_out(stats, fh=None) -> None:
    w = csv.writer(fh or sys.stdout)
    w.writerow(SUMMARY_HEADER)
    for s in stats:
        w.writerow(summary_row(s))


def cmd_run(args) -> int:
    plan = load_plan(args.plan)
    out = run_plan(plan, args.out, workers=args.workers)
    print((out / "summary.csv").read_text(), end="")
    return 0


def cmd_resume(args) -> int:
    out = resume(args.out, workers=args.workers)
    print((out / "summary.csv").read_text(), end="")
    return 0


def cmd_evaluate(args) -> int:
    scheme, learners, cfg = load_artifact(args.artifact)
    env = Environment(cfg)
    logs = evaluate(env, LearnedPolicy(learners), args.test_episodes, args.seed)
    if args.log:
        write_episode_logs(args.log, scheme, logs)
    _summary_out([summarize(scheme, logs)])
    return 0


def _scenario(args):
    cfg = load_config(args.config) if args.config else get_preset(args.preset)
    return cfg.replace(**dict(args.set or []))


def cmd_oracle(args) -> int:
    cfg = _scenario(args)
    env = Environment(cfg)
    policies = {"brute": OraclePolicy()}
    if args.baselines:
        policies |= {"equal": EqualPowerPolicy(), "random": RandomPowerPolicy(args.seed)}
    stats = []
    for name, pol in policies.items():
        logs = evaluate(env, pol, args.test_episodes, args.seed)
        stats.append(summarize(name, logs))
        if name == "brute" and args.log:
            write_episode_logs(args.log, name, logs)
    _summary_out(stats)
    return 0


def cmd_report(args) -> int:
    from ecovedge.plotting import render_report

    out = Path(args.out)
    if not (out / "manifest.json").exists():
        raise ConfigError(f"{out} is not a result directory (no manifest.json)")
    aggregate(out)
    table = out / "table.txt"
    if table.exists():
        print(table.read_text(), end="")
    for p in render_report(out):
        print(f"figure: {p}")
    return 0


def cmd_catalog(args) -> int:
    cfg = _scenario(args)
    env = Environment(cfg)
    for k, v in env.catalog.summary().items():
        print(f"{k} = {v}")
    print(f"raw = {raw_cardinality(cfg)}")
    if args.check:
        # independent recount of the all-links-on coverage catalog
        raw, feasible = catalog_count_bruteforce(cfg)
        print(f"coverage_raw = {raw}")
        print(f"coverage_feasible = {feasible}")
    return 0


def _kv(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    from ecovedge.config import _coerce

    try:
        return key.strip(), _coerce(key.strip(), value.strip())
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown config key {key.strip()!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecovedge", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment plan")
    r.add_argument("--plan", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    rs = sub.add_parser("resume", help="finish the missing cells of an existing run")
    rs.add_argument("--out", required=True)
    rs.add_argument("--workers", type=int, default=1)
    rs.set_defaults(func=cmd_resume)

    e = sub.add_parser("evaluate", help="greedy evaluation of a saved learner")
    e.add_argument("--artifact", required=True)
    e.add_argument("--test-episodes", type=int, default=250)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--log", help="write the per-step episode log CSV here")
    e.set_defaults(func=cmd_evaluate)

    for name, fn, hlp in (("oracle", cmd_oracle, "brute-force benchmark on a preset"),
                          ("catalog", cmd_catalog, "action catalog size and hash")):
        o = sub.add_parser(name, help=hlp)
        o.add_argument("--preset", default="paper")
        o.add_argument("--config", help="key = value scenario file (overrides --preset)")
        o.add_argument("--set", type=_kv, action="append", metavar="KEY=VALUE")
        o.set_defaults(func=fn)
    o = sub.choices["oracle"]
    o.add_argument("--test-episodes", type=int, default=250)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--baselines", action="store_true", help="also evaluate equal and random power")
    o.add_argument("--log", help="write the oracle episode log CSV here")
    sub.choices["catalog"].add_argument("--check", action="store_true", help="recount by brute-force filter")

    rp = sub.add_parser("report", help="comparison table and figures for a result directory")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ArtifactError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
