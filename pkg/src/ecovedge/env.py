"""Episode rollouts: one mobility trajectory plus one frozen channel per TTI."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ecovedge.actions import ActionCatalog, enumerate_actions
from ecovedge.channel import ChannelRealization, realize_trajectory, trajectory_distances
from ecovedge.config import ScenarioConfig
from ecovedge.radio import association_from_distances, reward_table, unit_cross
from ecovedge.scenario import Topology, VehicleState, build_topology, drop_vehicles, state_index, trajectory

TRAIN_STREAM = 0
AGENT_STREAM = 1
TEST_STREAM = 2


def stream(seed: int, kind: int, episode: int | None = None) -> np.random.Generator:
    key = [int(seed), kind] if episode is None else [int(seed), kind, int(episode)]
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass
class Rollout:
    states: list[VehicleState]
    state_idx: np.ndarray  # (T,)
    assoc: np.ndarray  # (T, U, A) coverage association
    h: np.ndarray  # (T, U, A, N)
    path_loss_db: np.ndarray
    shadowing_db: np.ndarray

    def __len__(self) -> int:
        return len(self.states)

    def channel(self, t: int) -> ChannelRealization:
        return ChannelRealization(h=self.h[t], path_loss_db=self.path_loss_db[t], shadowing_db=self.shadowing_db[t])

    @cached_property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.h, axis=-1)

    @cached_property
    def cross(self) -> np.ndarray:
        return unit_cross(self.h, self.norms)

    def next_states(self) -> np.ndarray:
        """State index of step t+1, or -1 where the episode ends."""
        return np.append(self.state_idx[1:], -1)


class Environment:
    """Freeway V2I environment for one configuration.

    ``catalog`` is the joint action catalog the learners share: in coverage
    mode its powers are masked by the per-step coverage association.
    """

    def __init__(self, cfg: ScenarioConfig, catalog: ActionCatalog | None = None):
        self.cfg = cfg
        self.topo: Topology = build_topology(cfg)
        self.catalog = catalog if catalog is not None else enumerate_actions(cfg)
        self._assoc_catalogs: dict[bytes, ActionCatalog] = {}

    @property
    def n_states(self) -> int:
        return self.cfg.n_states

    def rollout(self, rng: np.random.Generator, start: VehicleState | None = None) -> Rollout:
        start = start if start is not None else drop_vehicles(self.cfg, rng)
        states = trajectory(self.cfg, start)
        h, pl, shadow = realize_trajectory(states, self.topo, self.cfg, rng)
        return Rollout(
            states=states,
            state_idx=np.array([state_index(s, self.cfg) for s in states]),
            assoc=association_from_distances(trajectory_distances(states, self.topo), self.cfg.coverage_radius),
            h=h, path_loss_db=pl, shadowing_db=shadow,
        )

    def effective_powers(self, roll: Rollout, catalog: ActionCatalog | None = None) -> np.ndarray:
        """Per-step catalog powers with uncovered links switched off: ``(T, M, U, A)``."""
        catalog = catalog or self.catalog
        return catalog.powers[None] * roll.assoc[:, None]

    def rewards(self, roll: Rollout, catalog: ActionCatalog | None = None) -> np.ndarray:
        """Reward of every catalog action at every step, ``(T, M)``."""
        return reward_table(roll.cross, self.effective_powers(roll, catalog), self.cfg)

    def association_catalog(self, assoc: np.ndarray) -> ActionCatalog:
        """Coverage-mode catalog for one fixed association (cached)."""
        key = np.asarray(assoc, dtype=bool).tobytes()
        if key not in self._assoc_catalogs:
            self._assoc_catalogs[key] = enumerate_actions(self.cfg, "coverage", assoc)
        return self._assoc_catalogs[key]

    def covered_subcatalog(self, assoc: np.ndarray) -> ActionCatalog:
        """Learned-mode catalog actions that use only covered links (cached)."""
        key = b"sub" + np.asarray(assoc, dtype=bool).tobytes()
        if key not in self._assoc_catalogs:
            self._assoc_catalogs[key] = enumerate_actions(self.cfg, "learned", assoc)
        return self._assoc_catalogs[key]
