"""Episode logs and the aggregate statistics reported per scheme."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ecovedge.radio import LinkBudget


@dataclass
class EpisodeLog:
    """Per-step record of one evaluated episode."""

    episode: int
    state: np.ndarray  # (T,)
    action: np.ndarray  # (T,)
    sinr: np.ndarray  # (T, U) linear
    rate: np.ndarray  # (T, U)
    backhaul: np.ndarray  # (T, U)
    total_power: np.ndarray  # (T,)
    ee: np.ndarray  # (T,)
    reward: np.ndarray  # (T,)
    gate_failed: np.ndarray  # (T,) bool

    def __len__(self) -> int:
        return len(self.state)

    @classmethod
    def from_steps(cls, episode: int, states, actions, budgets: list[LinkBudget]) -> "EpisodeLog":
        return cls(
            episode=episode,
            state=np.asarray(states, dtype=np.int64),
            action=np.asarray(actions, dtype=np.int64),
            sinr=np.stack([b.sinr for b in budgets]),
            rate=np.stack([b.rate for b in budgets]),
            backhaul=np.stack([b.backhaul for b in budgets]),
            total_power=np.array([float(b.total_power) for b in budgets]),
            ee=np.array([float(b.ee) for b in budgets]),
            reward=np.array([float(b.reward) for b in budgets]),
            gate_failed=np.array([bool(b.gate_failed) for b in budgets]),
        )


def _cat(logs, name):
    if not logs:
        raise ValueError("no episode logs")
    return np.concatenate([getattr(log, name) for log in logs])


def success_probability(logs) -> float:
    failed = _cat(logs, "gate_failed")
    if failed.size == 0:
        raise ValueError("no steps logged")
    return 1.0 - failed.mean()


def average_ee(logs, gated: bool = True) -> float:
    """Mean per-step EE over all test steps.

    ``gated`` uses the reward, i.e. EE counted as zero whenever the SINR floor
    is missed; this is the figure compared across schemes.
    """
    vals = _cat(logs, "reward" if gated else "ee")
    if vals.size == 0:
        raise ValueError("no steps logged")
    return float(vals.mean())


def jain(x) -> float:
    x = np.asarray(x, dtype=float)
    den = x.size * np.sum(x ** 2)
    if den == 0:
        raise ValueError("Jain index undefined for an all-zero vector")
    return float(x.sum() ** 2 / den)


def jain_index(logs) -> float:
    """Per-step Jain index of backhaul consumption, averaged over non-degenerate steps."""
    c = _cat(logs, "backhaul")
    den = c.shape[1] * np.sum(c ** 2, axis=1)
    ok = den > 0
    if not ok.any():
        raise ValueError("every step has zero backhaul")
    return float(np.mean(c[ok].sum(axis=1) ** 2 / den[ok]))


def jain_index_pooled(logs) -> float:
    """Jain index of each VU's backhaul summed over all steps."""
    return jain(_cat(logs, "backhaul").sum(axis=0))


def deviation_percent(ee_bench: float, ee: float) -> float:
    return abs(ee_bench - ee) / ee_bench * 100.0 if ee_bench else float("nan")


def db_gain(ee_a: float, ee_b: float) -> float:
    if ee_a <= 0 or ee_b <= 0:
        return float("inf") if ee_a > 0 else float("nan")
    return 10.0 * math.log10(ee_a / ee_b)


@dataclass
class SummaryStats:
    scheme: str
    train_episodes: int
    test_episodes: int
    steps: int
    average_ee: float
    ee_std: float  # sample std over per-episode means
    raw_ee: float
    success: float
    jain: float
    jain_pooled: float
    extra: dict = field(default_factory=dict)


def summarize(scheme: str, logs, train_episodes: int = 0) -> SummaryStats:
    per_ep = [float(log.reward.mean()) for log in logs if len(log)]
    try:
        jn, jp = jain_index(logs), jain_index_pooled(logs)
    except ValueError:
        jn = jp = float("nan")
    return SummaryStats(
        scheme=scheme, train_episodes=train_episodes, test_episodes=len(logs),
        steps=int(sum(len(log) for log in logs)),
        average_ee=average_ee(logs), ee_std=float(np.std(per_ep, ddof=1)) if len(per_ep) > 1 else 0.0,
        raw_ee=average_ee(logs, gated=False), success=success_probability(logs),
        jain=jn, jain_pooled=jp,
    )


BENCHMARK = "brute"
ROW_ORDER = ["brute", "dmarl", "sarl", "marl", "equal", "random"]
DISPLAY = {"brute": "Brute Force (Benchmark)", "dmarl": "D-MARL", "sarl": "SARL", "marl": "MARL",
           "equal": "Equal Power", "random": "Random Power"}


def compare_schemes(stats: list[SummaryStats]) -> list[dict]:
    """Table rows: episodes, average EE, deviation from the benchmark, dB gains over the baselines."""
    by = {s.scheme: s for s in stats}
    if BENCHMARK not in by:
        raise ValueError("comparison needs a brute-force benchmark row")
    bench = by[BENCHMARK].average_ee
    order = [k for k in ROW_ORDER if k in by] + sorted(k for k in by if k not in ROW_ORDER)
    rows = []
    for k in order:
        s = by[k]
        rows.append({
            "scheme": k,
            "train_episodes": s.train_episodes,
            "test_episodes": s.test_episodes,
            "average_ee": s.average_ee,
            "deviation_pct": deviation_percent(bench, s.average_ee),
            "gain_vs_equal_db": db_gain(s.average_ee, by["equal"].average_ee) if "equal" in by else float("nan"),
            "gain_vs_random_db": db_gain(s.average_ee, by["random"].average_ee) if "random" in by else float("nan"),
            "success": s.success,
            "jain_pooled": s.jain_pooled,
        })
    return rows


def format_table(rows: list[dict], title: str = "") -> str:
    head = ["Scheme", "Training Episodes", "Test Episodes", "Average EE [bits/Hz/J]",
            "Deviation from Benchmark", "Success", "Jain (pooled)"]
    body = []
    for r in rows:
        dev = "0 % (Benchmark)" if r["scheme"] == BENCHMARK else f"{r['deviation_pct']:.4f} %"
        body.append([DISPLAY.get(r["scheme"], r["scheme"]), str(r["train_episodes"] or "N/A"),
                     str(r["test_episodes"]), f"{r['average_ee']:.9f}", dev,
                     f"{r['success']:.4f}", f"{r['jain_pooled']:.5f}"])
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(head)]
    line = "+".join("-" * (w + 2) for w in widths)
    fmt = lambda cells: "|".join(f" {c:<{w}} " for c, w in zip(cells, widths))
    out = [title] if title else []
    out += [line, fmt(head), line, *[fmt(b) for b in body], line]
    return "\n".join(out) + "\n"


# CSV schemas; floats at 9 significant digits
def _g(x) -> str:
    return f"{float(x):.9g}"


def episode_log_header(U: int) -> list[str]:
    return (["scheme", "episode", "step", "state", "action"]
            + [f"sinr_{i}" for i in range(U)] + [f"rate_{i}" for i in range(U)]
            + [f"backhaul_{i}" for i in range(U)]
            + ["total_power", "ee", "reward", "gate_failed"])


def write_episode_logs(path, scheme: str, logs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        U = logs[0].sinr.shape[1] if logs else 0
        w.writerow(episode_log_header(U))
        for log in logs:
            for t in range(len(log)):
                w.writerow([scheme, log.episode, t, int(log.state[t]), int(log.action[t]),
                            *map(_g, log.sinr[t]), *map(_g, log.rate[t]), *map(_g, log.backhaul[t]),
                            _g(log.total_power[t]), _g(log.ee[t]), _g(log.reward[t]), int(log.gate_failed[t])])


def read_episode_logs(path) -> tuple[str, list[EpisodeLog]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return "", []
    U = sum(1 for k in rows[0] if k.startswith("sinr_"))
    by_ep: dict[int, list[dict]] = {}
    for r in rows:
        by_ep.setdefault(int(r["episode"]), []).append(r)
    logs = []
    for ep, rs in by_ep.items():
        vec = lambda p: np.array([[float(r[f"{p}_{i}"]) for i in range(U)] for r in rs])
        col = lambda k: np.array([float(r[k]) for r in rs])
        logs.append(EpisodeLog(
            episode=ep, state=col("state").astype(np.int64), action=col("action").astype(np.int64),
            sinr=vec("sinr"), rate=vec("rate"), backhaul=vec("backhaul"),
            total_power=col("total_power"), ee=col("ee"), reward=col("reward"),
            gate_failed=col("gate_failed").astype(bool),
        ))
    return rows[0]["scheme"], logs


SUMMARY_HEADER = ["sweep", "value", "seed", "scheme", "train_episodes", "test_episodes", "steps",
                  "average_ee", "ee_std", "raw_ee", "success", "jain", "jain_pooled"]


def summary_row(s: SummaryStats, sweep: str = "none", value="", seed: int = 0) -> list[str]:
    return [sweep, str(value), str(seed), s.scheme, str(s.train_episodes), str(s.test_episodes), str(s.steps),
            _g(s.average_ee), _g(s.ee_std), _g(s.raw_ee), _g(s.success), _g(s.jain), _g(s.jain_pooled)]
