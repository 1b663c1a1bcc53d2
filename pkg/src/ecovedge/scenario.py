"""Freeway topology, vehicle drops and mobility, and the tabular state key."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ecovedge.config import ConfigError, ScenarioConfig


@dataclass(frozen=True)
class Topology:
    ap_positions: np.ndarray  # (A, 2) metres
    lane_y: np.ndarray  # (lanes,)

    @property
    def ap_count(self) -> int:
        return len(self.ap_positions)


@dataclass(frozen=True)
class VehicleState:
    x_shared: float
    lane_of_vu: tuple[int, ...]
    step: int = 0
    terminal: bool = False

    def positions(self, topo: Topology) -> np.ndarray:
        """(U, 2) VU coordinates."""
        ys = topo.lane_y[list(self.lane_of_vu)]
        return np.column_stack([np.full(len(ys), self.x_shared), ys])


def ap_x_positions(cfg: ScenarioConfig) -> np.ndarray:
    offset = (cfg.roi_length - (cfg.ap_count - 1) * cfg.ap_spacing) / 2.0
    return offset + cfg.ap_spacing * np.arange(cfg.ap_count)


def max_gap_to_nearest_ap(cfg: ScenarioConfig, resolution: float = 1.0) -> float:
    """Largest distance from any road point (on a grid) to its closest AP."""
    xs = np.append(np.arange(0.0, cfg.roi_length, resolution), cfg.roi_length)
    apx = ap_x_positions(cfg)
    worst = 0.0
    for y in cfg.lane_y:
        d = np.hypot(xs[:, None] - apx[None, :], y - cfg.ap_y)
        worst = max(worst, float(d.min(axis=1).max()))
    return worst


def build_topology(cfg: ScenarioConfig) -> Topology:
    apx = ap_x_positions(cfg)
    if cfg.ap_count > 1 and cfg.ap_spacing <= 0:
        raise ConfigError("ap_spacing must be > 0")
    if max_gap_to_nearest_ap(cfg) > cfg.coverage_radius:
        raise ConfigError(
            f"coverage_radius {cfg.coverage_radius} m leaves road points uncovered "
            f"(worst gap {max_gap_to_nearest_ap(cfg):.1f} m)"
        )
    return Topology(
        ap_positions=np.column_stack([apx, np.full(cfg.ap_count, cfg.ap_y)]),
        lane_y=np.asarray(cfg.lane_y, dtype=float),
    )


def drop_vehicles(cfg: ScenarioConfig, rng: np.random.Generator) -> VehicleState:
    if cfg.vu_count > cfg.lanes:
        raise ConfigError("one VU per lane: vu_count must not exceed lanes")
    x = float(rng.uniform(0.0, cfg.roi_length))
    lanes = rng.choice(cfg.lanes, size=cfg.vu_count, replace=False)
    return VehicleState(x_shared=x, lane_of_vu=tuple(int(l) for l in lanes))


def advance(state: VehicleState, cfg: ScenarioConfig) -> VehicleState:
    if state.terminal:
        raise RuntimeError("cannot advance a terminal state")
    x = state.x_shared + cfg.step_length
    return replace(state, x_shared=x, step=state.step + 1, terminal=x > cfg.roi_length)


def state_index(state: VehicleState, cfg: ScenarioConfig) -> int:
    # the tolerance absorbs drift from repeated additions of the step length;
    # the clamp guards the single point x == roi_length
    return min(int(math.floor(state.x_shared / cfg.step_length + 1e-9)), cfg.n_states - 1)


def trajectory(cfg: ScenarioConfig, start: VehicleState) -> list[VehicleState]:
    """All non-terminal states of one episode."""
    states = [start]
    while True:
        nxt = advance(states[-1], cfg)
        if nxt.terminal:
            return states
        states.append(nxt)
