"""Non-learning comparators: exhaustive search, equal power, random power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecovedge.actions import Action, ActionCatalog, COVERAGE
from ecovedge.channel import ChannelRealization
from ecovedge.config import ConfigError, ScenarioConfig
from ecovedge.radio import link_budget


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    action_index: int
    reward: float
    scanned: int


def brute_force(chan: ChannelRealization, catalog: ActionCatalog, cfg: ScenarioConfig,
                assoc: np.ndarray | None = None, max_candidates: int = 1_000_000) -> OracleResult:
    """Exact argmax of the gated EE over ``catalog``; ties go to the lowest index."""
    if len(catalog) > max_candidates:
        raise BudgetExceeded(f"catalog of {len(catalog)} actions exceeds scan budget {max_candidates}")
    rewards = link_budget(chan, catalog.masked_powers(assoc), cfg).reward
    best = int(np.argmax(rewards))
    return OracleResult(best, float(rewards[best]), len(catalog))


def equal_power_action(assoc: np.ndarray, cfg: ScenarioConfig) -> Action:
    """Each AP splits ``p_max`` evenly over its covered VUs, snapped down to the grid."""
    assoc = np.asarray(assoc, dtype=bool)
    n = assoc.sum(axis=0)
    level = np.floor_divide(cfg.power_levels, np.maximum(n, 1))
    if np.any((n > 0) & (level < 1)):
        raise ConfigError("an AP covers more VUs than it has power levels")
    return Action.from_array(assoc * level[None, :], COVERAGE)


def random_power_action(catalog: ActionCatalog, rng: np.random.Generator) -> tuple[int, Action]:
    """Uniform draw from a catalog built for the current association."""
    idx = int(rng.integers(len(catalog)))
    return idx, catalog.decode(idx)
