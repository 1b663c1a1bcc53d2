"""Greedy evaluation of every scheme on common test episodes."""

from __future__ import annotations

import numpy as np

from ecovedge.actions import LEARNED
from ecovedge.baselines import brute_force, equal_power_action, random_power_action
from ecovedge.env import TEST_STREAM, Environment, Rollout, stream
from ecovedge.metrics import EpisodeLog
from ecovedge.radio import link_budget


class LearnedPolicy:
    """Greedy (epsilon = 0) policy of a trained learner over the shared catalog."""

    def __init__(self, learners):
        self.learners = learners

    def choose(self, env: Environment, roll: Rollout, t: int):
        idx = self.learners.greedy(int(roll.state_idx[t]))
        if idx < 0:  # MARL joint choice that leaves a VU unserved
            local = self.learners.greedy_local(int(roll.state_idx[t]))
            levels = self.learners.joint_levels(local)
            return -1, env.catalog.grid.watts(levels) * roll.assoc[t]
        return idx, env.catalog.powers[idx] * roll.assoc[t]


class OraclePolicy:
    """Per-TTI exhaustive search over every action valid for the current association."""

    def choose(self, env: Environment, roll: Rollout, t: int):
        if env.catalog.mode == LEARNED:
            cat, assoc = env.catalog, roll.assoc[t]
        else:
            cat, assoc = env.association_catalog(roll.assoc[t]), None
        res = brute_force(roll.channel(t), cat, env.cfg, assoc=assoc)
        return res.action_index, cat.masked_powers(assoc)[res.action_index]


class EqualPowerPolicy:
    def choose(self, env: Environment, roll: Rollout, t: int):
        act = equal_power_action(roll.assoc[t], env.cfg)
        cat = env.association_catalog(roll.assoc[t])
        return cat.encode(act), act.power(cat.grid)


class RandomPowerPolicy:
    """Uniform over actions valid for the current coverage (learned mode: any covered subset)."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(np.random.SeedSequence([int(seed), 99]))

    def choose(self, env: Environment, roll: Rollout, t: int):
        if env.catalog.mode == LEARNED:
            cat = env.covered_subcatalog(roll.assoc[t])
        else:
            cat = env.association_catalog(roll.assoc[t])
        idx, act = random_power_action(cat, self.rng)
        return idx, act.power(cat.grid)


def evaluate(env: Environment, policy, test_episodes: int, seed: int) -> list[EpisodeLog]:
    """Run ``policy`` on ``test_episodes`` episodes drawn from the shared test stream."""
    logs = []
    for ep in range(test_episodes):
        roll = env.rollout(stream(seed, TEST_STREAM, ep))
        actions, budgets = [], []
        for t in range(len(roll)):
            idx, power = policy.choose(env, roll, t)
            actions.append(idx)
            budgets.append(link_budget(roll.channel(t), power, env.cfg))
        logs.append(EpisodeLog.from_steps(ep, roll.state_idx, actions, budgets))
    return logs


def hindsight_ceiling(env: Environment, test_episodes: int, seed: int) -> tuple[float, np.ndarray]:
    """Best average reward any state-indexed policy over ``env.catalog`` can reach on the test set.

    Picks, per state, the catalog action with the highest mean reward over the
    test steps in that state. Returns (average per-step reward, per-state action).
    """
    S, M = env.n_states, len(env.catalog)
    sums, counts = np.zeros((S, M)), np.zeros(S)
    for ep in range(test_episodes):
        roll = env.rollout(stream(seed, TEST_STREAM, ep))
        R = env.rewards(roll)
        np.add.at(sums, roll.state_idx, R)
        np.add.at(counts, roll.state_idx, 1)
    best = sums.argmax(axis=1)
    return float(sums.max(axis=1).sum() / counts.sum()), best
