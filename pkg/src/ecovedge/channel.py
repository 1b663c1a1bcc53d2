"""Per-TTI MISO channels: distance path loss, log-normal shadowing, Rayleigh fast fading."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ecovedge.config import FadingParams, ScenarioConfig
from ecovedge.scenario import Topology, VehicleState


def path_loss_db(distance, params: FadingParams):
    d = np.maximum(np.asarray(distance, dtype=float), params.min_distance)
    out = params.pathloss_intercept + params.pathloss_exponent_coeff * np.log10(d / 1000.0)
    return out if out.ndim else float(out)


def draw_shadowing_db(rng: np.random.Generator, params: FadingParams, size=None):
    if params.shadowing_std == 0:
        return np.zeros(size) if size is not None else 0.0
    return rng.normal(0.0, params.shadowing_std, size=size)


def draw_fast_fading(rng: np.random.Generator, n) -> np.ndarray:
    """i.i.d. CN(0, 1) samples; ``n`` may be an int or a shape."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    if np.prod(shape) < 1:
        raise ValueError("need at least one sample")
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Channel of every VU towards every AP antenna for one TTI.

    ``h[i, j]`` is the length-``N`` block from AP ``j`` to VU ``i``.
    """

    h: np.ndarray  # (U, A, N) complex
    path_loss_db: np.ndarray  # (U, A)
    shadowing_db: np.ndarray  # (U, A)

    def __post_init__(self):
        object.__setattr__(self, "norms", np.linalg.norm(self.h, axis=2))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.h.shape

    def stacked(self, i: int) -> np.ndarray:
        """Concatenated channel of VU ``i`` over all APs."""
        return self.h[i].reshape(-1)


def vu_ap_distances(state: VehicleState, topo: Topology) -> np.ndarray:
    pos = state.positions(topo)
    return np.linalg.norm(pos[:, None, :] - topo.ap_positions[None, :, :], axis=2)


def trajectory_distances(states, topo: Topology) -> np.ndarray:
    """``(T, U, A)`` distances for states sharing one lane assignment."""
    x = np.array([s.x_shared for s in states])
    y = topo.lane_y[list(states[0].lane_of_vu)]
    dx = x[:, None, None] - topo.ap_positions[None, None, :, 0]
    dy = y[None, :, None] - topo.ap_positions[None, None, :, 1]
    return np.hypot(dx, dy)


FastFading = Callable[[np.random.Generator, tuple], np.ndarray]


def realize_trajectory(states, topo: Topology, cfg: ScenarioConfig, rng: np.random.Generator,
                       fast_fading: FastFading = draw_fast_fading):
    """Independent per-TTI channels for a sequence of states.

    Returns ``(h, path_loss_db, shadowing_db)`` stacked over time.
    """
    params = cfg.fading
    dist = trajectory_distances(states, topo)
    pl = path_loss_db(dist, params)
    shadow = draw_shadowing_db(rng, params, size=dist.shape)
    amp = 10.0 ** (-(pl + shadow) / 20.0)
    zeta = fast_fading(rng, (*dist.shape, cfg.ap_antennas))
    return amp[..., None] * zeta, pl, shadow


def realize_channel(state: VehicleState, topo: Topology, cfg: ScenarioConfig, rng: np.random.Generator,
                    fast_fading: FastFading = draw_fast_fading) -> ChannelRealization:
    """Draw the channel of one TTI.

    ``fast_fading`` is injectable so tests can substitute a deterministic generator.
    """
    h, pl, shadow = realize_trajectory([state], topo, cfg, rng, fast_fading)
    return ChannelRealization(h=h[0], path_loss_db=pl[0], shadowing_db=shadow[0])


def dump_channel_trace(path, records) -> None:
    """Write ``(step, ChannelRealization)`` pairs as a CSV debug trace."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "vu", "ap", "block_norm", "path_loss_db", "shadowing_db"])
        for step, chan in records:
            U, A, _ = chan.shape
            for i in range(U):
                for j in range(A):
                    w.writerow([step, i, j, f"{chan.norms[i, j]:.9g}",
                                f"{chan.path_loss_db[i, j]:.9g}", f"{chan.shadowing_db[i, j]:.9g}"])
