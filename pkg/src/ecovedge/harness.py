"""Experiment orchestration: plans, seeded cells, manifests, resume, aggregation."""

from __future__ import annotations

import csv
import json
import logging
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ecovedge import __version__
from ecovedge.config import ConfigError, ScenarioConfig, dump_config, get_preset, parse_kv, _coerce, _TYPES
from ecovedge.env import Environment
from ecovedge.evaluation import (EqualPowerPolicy, LearnedPolicy, OraclePolicy, RandomPowerPolicy,
                                 evaluate)
from ecovedge.learning import ArtifactError, dmarl_train, load_artifact, marl_train, sarl_train, save_artifact
from ecovedge.metrics import (SUMMARY_HEADER, compare_schemes, format_table, summarize, summary_row,
                              write_episode_logs)

log = logging.getLogger(__name__)

SCHEMES = ("brute", "sarl", "marl", "dmarl", "equal", "random")
LEARNED_SCHEMES = ("sarl", "marl", "dmarl")
SWEEPS = {"none": None, "sinr_min": "sinr_min_db", "coverage_radius": "coverage_radius"}
DEFAULT_EPISODES = {"dmarl": 25_000, "sarl": 100_000, "marl": 100_000}


class CellFailure(RuntimeError):
    pass


@dataclass
class ExperimentPlan:
    preset: str = "paper"
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    sweep: str = "none"
    sweep_values: list[float] = field(default_factory=list)
    episodes: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_EPISODES))
    test_episodes: int = 250
    seeds: list[int] = field(default_factory=lambda: [0])
    master_seed: int = 2020
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = set(self.schemes) - set(SCHEMES)
        if bad:
            raise ConfigError(f"unknown schemes {sorted(bad)}")
        if self.sweep not in SWEEPS:
            raise ConfigError(f"unknown sweep {self.sweep!r}")
        if self.sweep != "none" and not self.sweep_values:
            raise ConfigError("a sweep needs a nonempty sweep_values list")
        if self.test_episodes < 1 or not self.seeds:
            raise ConfigError("need test_episodes >= 1 and at least one seed")

    @property
    def points(self) -> list:
        return list(self.sweep_values) if self.sweep != "none" else [""]

    def config_for(self, value) -> ScenarioConfig:
        cfg = get_preset(self.preset, **self.overrides)
        if self.sweep != "none":
            cfg = cfg.replace(**{SWEEPS[self.sweep]: float(value)})
        return cfg

    def cells(self) -> list[tuple]:
        return [(v, s, k) for v in self.points for s in self.schemes for k in range(len(self.seeds))]


def _floats(raw: str) -> list[float]:
    return [float(x) for x in raw.split(",") if x.strip()]


def plan_from_text(text: str) -> ExperimentPlan:
    kv = parse_kv(text)
    plan = ExperimentPlan()
    overrides = {}
    for key, raw in kv.items():
        if key == "preset":
            plan.preset = raw
        elif key == "schemes":
            plan.schemes = [s.strip() for s in raw.split(",") if s.strip()]
        elif key == "sweep":
            plan.sweep = raw
        elif key == "sweep_values":
            plan.sweep_values = _floats(raw)
        elif key.endswith("_episodes") and key[:-9] in DEFAULT_EPISODES:
            plan.episodes[key[:-9]] = int(raw)
        elif key == "test_episodes":
            plan.test_episodes = int(raw)
        elif key == "seeds":
            plan.seeds = [int(x) for x in raw.split(",") if x.strip()]
        elif key == "master_seed":
            plan.master_seed = int(raw)
        elif key in _TYPES and key != "fading":
            overrides[key] = _coerce(key, raw)
        else:
            raise ConfigError(f"unknown plan key {key!r}")
    plan.overrides = overrides
    plan.__post_init__()
    return plan


def load_plan(path) -> ExperimentPlan:
    return plan_from_text(Path(path).read_text())


def cell_seed(*parts) -> int:
    """Stable integer seed from mixed parts (order-insensitive across cells, not within)."""
    words = [zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint32)[0])


def cell_dir(out: Path, plan: ExperimentPlan, value, scheme: str, k: int) -> Path:
    point = "base" if plan.sweep == "none" else f"{plan.sweep}_{value:g}"
    return out / "cells" / point / scheme / f"seed{plan.seeds[k]}"


def run_cell(plan: ExperimentPlan, value, scheme: str, k: int, out: Path) -> dict:
    """Train (learned schemes), evaluate, and write one cell's files."""
    t0 = time.perf_counter()
    seed = plan.seeds[k]
    cfg = plan.config_for(value)
    env = Environment(cfg)
    train_seed = cell_seed(plan.master_seed, plan.sweep, value, scheme, seed)
    # every scheme and sweep point sees the same test channels
    test_seed = cell_seed(plan.master_seed, "test", seed)
    d = cell_dir(out, plan, value, scheme, k)
    d.mkdir(parents=True, exist_ok=True)
    record = {"sweep": plan.sweep, "value": value, "scheme": scheme, "seed": seed, "dir": str(d.relative_to(out)),
              "catalog_hash": env.catalog.hash}
    train_eps = 0
    if scheme in LEARNED_SCHEMES:
        train_eps = plan.episodes[scheme]
        if scheme == "dmarl":
            learners, report = dmarl_train(env, cfg.dmarl_agents, train_eps, train_seed)
        elif scheme == "sarl":
            learners, report = sarl_train(env, train_eps, train_seed)
        else:
            learners, report = marl_train(env, train_eps, train_seed)
        save_artifact(d / "artifact.npz", learners, cfg, scheme, report)
        record["artifact"] = str((d / "artifact.npz").relative_to(out))
        record["train_time"] = report.wall_time
        policy = LearnedPolicy(learners)
    elif scheme == "brute":
        policy = OraclePolicy()
    elif scheme == "equal":
        policy = EqualPowerPolicy()
    else:
        policy = RandomPowerPolicy(train_seed)
    logs = evaluate(env, policy, plan.test_episodes, test_seed)
    write_episode_logs(d / "episodes.csv", scheme, logs)
    stats = summarize(scheme, logs, train_eps)
    with open(d / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        w.writerow(summary_row(stats, plan.sweep, value if plan.sweep != "none" else "", seed))
    record["status"] = "done"
    record["wall_time"] = time.perf_counter() - t0
    return record


def _run_cell_job(args):
    plan, value, scheme, k, out = args
    try:
        return run_cell(plan, value, scheme, k, Path(out))
    except Exception as exc:
        return {"sweep": plan.sweep, "value": value, "scheme": scheme, "seed": plan.seeds[k],
                "status": "failed", "error": f"{type(exc).__name__}: {exc}"}


def _plan_dict(plan: ExperimentPlan) -> dict:
    return asdict(plan)


def write_manifest(plan: ExperimentPlan, out: Path) -> dict:
    configs, hashes = {}, {}
    for v in plan.points:
        cfg = plan.config_for(v)
        env = Environment(cfg)
        configs[str(v)] = dump_config(cfg)
        hashes[str(v)] = env.catalog.hash
    manifest = {"code_version": __version__, "plan": _plan_dict(plan), "configs": configs,
                "catalog_hashes": hashes, "created": time.strftime("%Y-%m-%dT%H:%M:%S")}
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    (out / "cells.jsonl").touch()
    return manifest


def read_cells(out: Path) -> dict[tuple, dict]:
    done = {}
    path = out / "cells.jsonl"
    if not path.exists():
        return done
    for line in path.read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            done[(str(rec["value"]), rec["scheme"], rec["seed"])] = rec
    return done


def _cell_complete(out: Path, rec: dict | None) -> bool:
    if not rec or rec.get("status") != "done":
        return False
    d = out / rec["dir"]
    if not (d / "episodes.csv").exists() or not (d / "summary.csv").exists():
        return False
    if "artifact" in rec:
        art = out / rec["artifact"]
        if not art.exists():
            return False
        load_artifact(art)  # raises ArtifactError naming the file when corrupted
    return True


def _execute(plan: ExperimentPlan, out: Path, todo: list[tuple], workers: int) -> list[dict]:
    jobs = [(plan, v, s, k, str(out)) for v, s, k in todo]
    records = []
    with open(out / "cells.jsonl", "a") as fh:
        def emit(rec):
            # only the parent process appends to the manifest log
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()
            records.append(rec)
            log.info("cell %s/%s/seed%s: %s", rec["value"], rec["scheme"], rec["seed"], rec["status"])

        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rec in pool.map(_run_cell_job, jobs):
                    emit(rec)
        else:
            for job in jobs:
                emit(_run_cell_job(job))
    return records


def run_plan(plan: ExperimentPlan, out, workers: int = 1) -> Path:
    """Run every (sweep point, scheme, seed) cell and aggregate the results under ``out``."""
    out = Path(out)
    write_manifest(plan, out)
    records = _execute(plan, out, plan.cells(), workers)
    aggregate(out, plan)
    _raise_failures(records)
    return out


def _raise_failures(records: list[dict]) -> None:
    bad = [r for r in records if r["status"] != "done"]
    if bad:
        msg = "; ".join(f"(sweep={r['sweep']}, value={r['value']}, scheme={r['scheme']}, seed={r['seed']}): "
                        f"{r['error']}" for r in bad)
        raise CellFailure(f"{len(bad)} cell(s) failed: {msg}")


def resume(out, workers: int = 1) -> Path:
    """Re-run only the cells of an existing result directory that are missing or failed."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    plan = ExperimentPlan(**manifest["plan"])
    for v in plan.points:
        h = Environment(plan.config_for(v)).catalog.hash
        if manifest["catalog_hashes"][str(v)] != h:
            raise ArtifactError(f"catalog hash mismatch for sweep point {v!r}: manifest "
                                f"{manifest['catalog_hashes'][str(v)]}, current {h}")
    recs = read_cells(out)
    todo = [(v, s, k) for v, s, k in plan.cells()
            if not _cell_complete(out, recs.get((str(v), s, plan.seeds[k])))]
    records = _execute(plan, out, todo, workers) if todo else []
    aggregate(out, plan)
    _raise_failures(records)
    return out


def load_summaries(out: Path) -> list[dict]:
    rows = []
    for path in sorted((out / "cells").glob("*/*/*/summary.csv")):
        with open(path, newline="") as fh:
            rows.extend(csv.DictReader(fh))
    order = {s: n for n, s in enumerate(SCHEMES)}
    rows.sort(key=lambda r: (r["sweep"], float(r["value"]) if r["value"] else 0.0,
                             order.get(r["scheme"], 99), int(r["seed"])))
    return rows


def aggregate(out, plan: ExperimentPlan | None = None) -> list[dict]:
    """Collect cell summaries into ``summary.csv``, plot-data CSVs, and the comparison table."""
    out = Path(out)
    rows = load_summaries(out)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        w.writeheader()
        w.writerows(rows)
    if rows and rows[0]["sweep"] != "none":
        write_plot_data(out, rows)
    table = comparison_table(rows)
    if table:
        (out / "table.txt").write_text(table)
    return rows


def _mean_by(rows, key_fields, metric):
    acc: dict[tuple, list[float]] = {}
    for r in rows:
        acc.setdefault(tuple(r[k] for k in key_fields), []).append(float(r[metric]))
    return {k: float(np.mean(v)) for k, v in acc.items()}


def write_plot_data(out: Path, rows: list[dict]) -> None:
    """One CSV per metric: x = sweep value, one column per scheme (mean over seeds)."""
    sweep = rows[0]["sweep"]
    schemes = [s for s in SCHEMES if any(r["scheme"] == s for r in rows)]
    xs = sorted({float(r["value"]) for r in rows})
    (out / "plots").mkdir(exist_ok=True)
    for metric in ("success", "average_ee", "jain_pooled"):
        means = _mean_by(rows, ("value", "scheme"), metric)
        lookup = {(float(v), s): m for (v, s), m in means.items()}
        with open(out / "plots" / f"{sweep}_{metric}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([sweep, *schemes])
            for x in xs:
                w.writerow([f"{x:g}", *(f"{lookup[(x, s)]:.9g}" if (x, s) in lookup else "" for s in schemes)])


def comparison_table(rows: list[dict]) -> str:
    """Table-style comparison per sweep point (means over seeds)."""
    from ecovedge.metrics import SummaryStats

    if not rows:
        return ""
    blocks = []
    for value in sorted({r["value"] for r in rows}, key=lambda v: float(v) if v else 0.0):
        sub = [r for r in rows if r["value"] == value]
        stats = []
        for s in SCHEMES:
            rs = [r for r in sub if r["scheme"] == s]
            if not rs:
                continue
            m = lambda k: float(np.mean([float(r[k]) for r in rs]))
            stats.append(SummaryStats(
                scheme=s, train_episodes=int(rs[0]["train_episodes"]), test_episodes=int(rs[0]["test_episodes"]),
                steps=int(rs[0]["steps"]), average_ee=m("average_ee"), ee_std=m("ee_std"), raw_ee=m("raw_ee"),
                success=m("success"), jain=m("jain"), jain_pooled=m("jain_pooled")))
        if not any(s.scheme == "brute" for s in stats):
            continue
        title = "Performance comparison" + (f" ({sub[0]['sweep']} = {value})" if value else "")
        blocks.append(format_table(compare_schemes(stats), title))
    return "\n".join(blocks)
