"""Tabular Q-learning: centralized SARL, per-AP MARL, and segmented-action D-MARL.

All learners share the same mechanics. States are x-bins, actions are indices
into a joint catalog (or per-AP option tables for MARL), and each step's
rewards come from one frozen channel realization. Exploration draws for a
whole episode are taken up front, so RNG consumption does not depend on
epsilon or on the values in the tables.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ecovedge.actions import ActionCatalog, Segment, partition, per_ap_catalogs
from ecovedge.config import config_from_mapping, dump_config, parse_kv
from ecovedge.env import AGENT_STREAM, TRAIN_STREAM, Environment, stream


@dataclass(frozen=True)
class DecaySchedule:
    start: float = 1.0
    end: float = 0.01
    horizon: int = 1

    def __post_init__(self):
        if not self.start >= self.end >= 0:
            raise ValueError("need start >= end >= 0")

    def __call__(self, episode: int) -> float:
        """Value at ``episode`` (0-based), linear from start to end over the horizon."""
        if self.horizon <= 1:
            return self.end if episode > 0 else self.start
        frac = min(episode / (self.horizon - 1), 1.0)
        return self.start + (self.end - self.start) * frac


def q_update(q: np.ndarray, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float) -> float:
    """One Q-learning step; ``s_next < 0`` marks a terminal transition."""
    future = q[s_next].max() if s_next >= 0 else 0.0
    q[s, a] = (1.0 - alpha) * q[s, a] + alpha * (r + gamma * future)
    return q[s, a]


def epsilon_greedy(q: np.ndarray, s: int, eps: float, rng: np.random.Generator) -> int:
    """Segment-local action: uniform with probability ``eps``, else the lowest-index argmax."""
    if rng.random() < eps:
        return int(rng.integers(q.shape[1]))
    return int(np.argmax(q[s]))


class CentralRegister:
    """Per-state best joint action found by any agent, replaced only on strict improvement."""

    def __init__(self, n_states: int):
        self.action = np.full(n_states, -1, dtype=np.int64)
        self.reward = np.full(n_states, -np.inf)

    def update(self, s: int, a: int, r: float) -> bool:
        if r > self.reward[s]:
            self.action[s] = a
            self.reward[s] = r
            return True
        return False

    def challenge(self, s: int, a: int, r: float, current: float) -> bool:
        """Replace when ``r`` beats the stored action's reward ``current`` on the same TTI."""
        self.reward[s] = current
        return self.update(s, a, r)

    def known(self, s: int) -> bool:
        return self.action[s] >= 0


def central_update(reg: CentralRegister, s: int, a: int, r: float) -> bool:
    return reg.update(s, a, r)


@dataclass
class TrainReport:
    scheme: str
    episodes: int
    returns: list[float] = field(default_factory=list)
    final_epsilon: float = 1.0
    final_alpha: float = 1.0
    wall_time: float = 0.0
    actions: list[np.ndarray] | None = None  # per-episode (T, n_agents) traces when recorded


def schedules(cfg, episodes: int) -> tuple[DecaySchedule, DecaySchedule]:
    return (DecaySchedule(cfg.eps_start, cfg.eps_end, episodes),
            DecaySchedule(cfg.alpha_start, cfg.alpha_end, episodes))


def init_tables(shapes, high: float, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.uniform(0.0, high, size=shape) for shape in shapes]


@dataclass
class SegmentLearners:
    """N agents over contiguous segments of one joint catalog (D-MARL; N=1 is SARL)."""

    segments: list[Segment]
    tables: list[np.ndarray]
    register: CentralRegister
    catalog_hash: str

    def greedy(self, s: int) -> int:
        """Joint action of the learned central register (falls back to the agents' tables)."""
        if self.register.known(s):
            return int(self.register.action[s])
        return self.table_greedy(s)

    def table_greedy(self, s: int) -> int:
        best, best_a = -np.inf, 0
        for seg, q in zip(self.segments, self.tables):
            a = int(np.argmax(q[s]))
            if q[s, a] > best:
                best, best_a = q[s, a], seg.lo + a
        return best_a


def _train_segments(env: Environment, segments: list[Segment], episodes: int, seed: int,
                    scheme: str, record: bool = False) -> tuple[SegmentLearners, TrainReport]:
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    cfg = env.cfg
    S = env.n_states
    agent_rng = stream(seed, AGENT_STREAM)
    tables = init_tables([(S, seg.size) for seg in segments], cfg.q_init_high, agent_rng)
    reg = CentralRegister(S)
    eps_s, alpha_s = schedules(cfg, episodes)
    report = TrainReport(scheme=scheme, episodes=episodes, actions=[] if record else None)
    sizes = np.array([seg.size for seg in segments])
    los = [seg.lo for seg in segments]
    gamma = cfg.discount
    challenge = cfg.register_compare == "current"
    t0 = time.perf_counter()
    N = len(segments)
    for ep in range(episodes):
        eps, alpha = eps_s(ep), alpha_s(ep)
        roll = env.rollout(stream(seed, TRAIN_STREAM, ep))
        R = env.rewards(roll)
        T = len(roll)
        u = agent_rng.random((T, N))
        rand_a = agent_rng.integers(0, sizes, size=(T, N))
        s_idx = roll.state_idx.tolist()
        s_next = roll.next_states().tolist()
        trace = np.empty((T, N), dtype=np.int64) if record else None
        total = 0.0
        for t in range(T):
            s, sn = s_idx[t], s_next[t]
            for n in range(N):
                q = tables[n]
                a = int(rand_a[t, n]) if u[t, n] < eps else int(np.argmax(q[s]))
                g = los[n] + a
                r = float(R[t, g])
                future = q[sn].max() if sn >= 0 else 0.0
                q[s, a] = (1.0 - alpha) * q[s, a] + alpha * (r + gamma * future)
                if challenge and reg.action[s] >= 0:
                    reg.challenge(s, g, r, float(R[t, reg.action[s]]))
                else:
                    reg.update(s, g, r)
                if record:
                    trace[t, n] = g
            # executed action: the agent's own for SARL, the register's best for D-MARL
            total += r if N == 1 else float(R[t, reg.action[s]])
        report.returns.append(total)
        if record:
            report.actions.append(trace)
    report.final_epsilon, report.final_alpha = eps_s(episodes - 1), alpha_s(episodes - 1)
    report.wall_time = time.perf_counter() - t0
    return SegmentLearners(segments, tables, reg, env.catalog.hash), report


def dmarl_train(env: Environment, n_agents: int, episodes: int, seed: int, record: bool = False):
    """D-MARL: each agent learns on its own contiguous segment of the joint catalog.

    At every step all agents score their candidates on the same frozen channel,
    update their own tables, and offer ``(action, reward)`` to the central register.
    """
    segs = partition(len(env.catalog), n_agents)
    return _train_segments(env, segs, episodes, seed, "dmarl", record)


def sarl_train(env: Environment, episodes: int, seed: int, record: bool = False):
    """Single agent over the whole catalog."""
    learners, report = _train_segments(env, partition(len(env.catalog), 1), episodes, seed, "sarl", record)
    return learners, report


@dataclass
class PerAPLearners:
    """Independent per-AP learners whose joint choice indexes the shared catalog."""

    options: list[np.ndarray]  # per AP, (M_j, U) level vectors
    tables: list[np.ndarray]
    joint_index: np.ndarray  # shape (M_0, ..., M_{A-1}); -1 where the joint action is invalid
    catalog_hash: str

    def greedy_local(self, s: int) -> tuple[int, ...]:
        return tuple(int(np.argmax(q[s])) for q in self.tables)

    def greedy(self, s: int) -> int:
        return int(self.joint_index[self.greedy_local(s)])

    def joint_levels(self, local: tuple[int, ...]) -> np.ndarray:
        return np.stack([opt[a] for opt, a in zip(self.options, local)], axis=1)


def build_joint_index(options: list[np.ndarray], catalog: ActionCatalog) -> np.ndarray:
    shape = tuple(len(o) for o in options)
    out = np.full(shape, -1, dtype=np.int64)
    for local in np.ndindex(*shape):
        levels = np.stack([o[a] for o, a in zip(options, local)], axis=1)
        try:
            out[local] = catalog.encode(levels)
        except KeyError:
            pass  # leaves some VU unserved
    return out


def marl_train(env: Environment, episodes: int, seed: int, record: bool = False):
    """One independent learner per AP sharing the global gated reward of the joint action."""
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    cfg = env.cfg
    S = env.n_states
    options = per_ap_catalogs(cfg, env.catalog.mode)
    joint = build_joint_index(options, env.catalog)
    agent_rng = stream(seed, AGENT_STREAM)
    tables = init_tables([(S, len(o)) for o in options], cfg.q_init_high, agent_rng)
    eps_s, alpha_s = schedules(cfg, episodes)
    report = TrainReport(scheme="marl", episodes=episodes, actions=[] if record else None)
    sizes = np.array([len(o) for o in options])
    A = len(options)
    gamma = cfg.discount
    t0 = time.perf_counter()
    for ep in range(episodes):
        eps, alpha = eps_s(ep), alpha_s(ep)
        roll = env.rollout(stream(seed, TRAIN_STREAM, ep))
        R = env.rewards(roll)
        T = len(roll)
        u = agent_rng.random((T, A))
        rand_a = agent_rng.integers(0, sizes, size=(T, A))
        s_idx = roll.state_idx.tolist()
        s_next = roll.next_states().tolist()
        trace = np.empty((T, 1), dtype=np.int64) if record else None
        total = 0.0
        for t in range(T):
            s, sn = s_idx[t], s_next[t]
            local = tuple(int(rand_a[t, j]) if u[t, j] < eps else int(np.argmax(tables[j][s]))
                          for j in range(A))
            g = int(joint[local])
            r = float(R[t, g]) if g >= 0 else 0.0
            for j in range(A):
                q = tables[j]
                future = q[sn].max() if sn >= 0 else 0.0
                q[s, local[j]] = (1.0 - alpha) * q[s, local[j]] + alpha * (r + gamma * future)
            total += r
            if record:
                trace[t, 0] = g
        report.returns.append(total)
        if record:
            report.actions.append(trace)
    report.final_epsilon, report.final_alpha = eps_s(episodes - 1), alpha_s(episodes - 1)
    report.wall_time = time.perf_counter() - t0
    return PerAPLearners(options, tables, joint, env.catalog.hash), report


ARTIFACT_VERSION = 1


class ArtifactError(RuntimeError):
    pass


def save_artifact(path, learners, cfg, scheme: str, report: TrainReport | None = None) -> None:
    """Write learned tables (and the register) to a versioned ``.npz``."""
    data = {
        "version": np.array(ARTIFACT_VERSION),
        "scheme": np.array(scheme),
        "config": np.array(dump_config(cfg)),
        "catalog_hash": np.array(learners.catalog_hash),
        "n_states": np.array(cfg.n_states),
        "n_tables": np.array(len(learners.tables)),
    }
    for n, q in enumerate(learners.tables):
        data[f"q_{n}"] = q
    if isinstance(learners, SegmentLearners):
        data["segments"] = np.array([[s.agent, s.lo, s.hi] for s in learners.segments])
        data["register_action"] = learners.register.action
        data["register_reward"] = learners.register.reward
    else:
        for n, o in enumerate(learners.options):
            data[f"options_{n}"] = o
        data["joint_index"] = learners.joint_index
    if report is not None:
        data["returns"] = np.asarray(report.returns)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **data)


def load_artifact(path, env=None):
    """Load an artifact; returns ``(scheme, learners, cfg)``.

    The catalog hash is checked against a freshly enumerated catalog for the
    stored configuration (or ``env`` when given).
    """
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except Exception as exc:  # zip/format errors surface as many types
        raise ArtifactError(f"cannot read learned-table artifact {path}: {exc}") from exc
    try:
        if int(data["version"]) != ARTIFACT_VERSION:
            raise ArtifactError(f"{path}: unsupported artifact version {int(data['version'])}")
        cfg = config_from_mapping(parse_kv(str(data["config"])))
        scheme = str(data["scheme"])
        tables = [data[f"q_{n}"] for n in range(int(data["n_tables"]))]
        if env is None:
            env = Environment(cfg)
        stored = str(data["catalog_hash"])
        if stored != env.catalog.hash:
            raise ArtifactError(f"{path}: catalog hash {stored} does not match {env.catalog.hash}")
        if any(q.shape[0] != int(data["n_states"]) or not np.all(np.isfinite(q)) for q in tables):
            raise ArtifactError(f"{path}: malformed Q-table")
        if "segments" in data:
            segs = [Segment(int(a), int(lo), int(hi)) for a, lo, hi in data["segments"]]
            reg = CentralRegister(int(data["n_states"]))
            reg.action[:] = data["register_action"]
            reg.reward[:] = data["register_reward"]
            learners = SegmentLearners(segs, tables, reg, stored)
        else:
            options = [data[f"options_{n}"] for n in range(len(tables))]
            learners = PerAPLearners(options, tables, data["joint_index"], stored)
    except KeyError as exc:
        raise ArtifactError(f"{path}: missing field {exc}") from exc
    return scheme, learners, cfg
