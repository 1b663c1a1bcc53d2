"""Link-level math: coverage association, MRT beamforming, SINR, rate, backhaul, EE, reward.

Power allocations are ``(U, A)`` arrays in watts. Every evaluation function also
accepts a leading batch axis ``(M, U, A)`` so a whole action catalog can be
scored against one frozen channel in a single call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecovedge.channel import ChannelRealization, vu_ap_distances
from ecovedge.config import ScenarioConfig
from ecovedge.scenario import Topology, VehicleState


class DegenerateChannelError(ArithmeticError):
    pass


class ConstraintViolation(ValueError):
    pass


def coverage_association(state: VehicleState, topo: Topology, cfg: ScenarioConfig) -> np.ndarray:
    """Boolean ``(U, A)`` matrix: AP ``j`` serves VU ``i`` iff it is within coverage."""
    return association_from_distances(vu_ap_distances(state, topo), cfg.coverage_radius)


def association_from_distances(dist: np.ndarray, radius: float) -> np.ndarray:
    assoc = np.asarray(dist) <= radius
    if not assoc.any(axis=-1).all():
        raise ConstraintViolation("a VU is outside the coverage of every AP")
    return assoc


def serving_sets(assoc: np.ndarray) -> tuple[list[list[int]], list[list[int]]]:
    """(APs serving each VU, VUs served by each AP)."""
    assoc = np.asarray(assoc, dtype=bool)
    return ([list(np.flatnonzero(r)) for r in assoc], [list(np.flatnonzero(c)) for c in assoc.T])


def unit_cross(h: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """``cross[..., i, k, j] = h_ij^H h_kj / ||h_kj||`` (zero for zero-norm blocks)."""
    safe = np.where(norms > 0, norms, 1.0)
    unit = np.where(norms[..., None] > 0, h / safe[..., None], 0.0)
    return np.einsum("...ijn,...kjn->...ikj", h.conj(), unit)


def gains_from_cross(cross: np.ndarray, power: np.ndarray) -> np.ndarray:
    return (cross * np.sqrt(power)[..., None, :, :]).sum(axis=-1)


def _check_power(norms: np.ndarray, power: np.ndarray) -> None:
    if np.any(power < 0):
        raise ConstraintViolation("negative power")
    if np.any((norms == 0) & (power > 0)):
        raise DegenerateChannelError("power assigned to a zero-norm channel block")


def effective_gains(chan: ChannelRealization, power: np.ndarray) -> np.ndarray:
    """``g[..., i, k] = sum_j h_ij^H w_kj`` with MRT beams ``w_kj = h_kj/||h_kj|| * sqrt(P_kj)``."""
    power = np.asarray(power, dtype=float)
    _check_power(chan.norms, power)
    return gains_from_cross(unit_cross(chan.h, chan.norms), power)


def sinr(gains: np.ndarray, noise_power: float) -> np.ndarray:
    mag2 = np.abs(gains) ** 2
    desired = np.diagonal(mag2, axis1=-2, axis2=-1)
    interference = mag2.sum(axis=-1) - desired
    return desired / (noise_power + interference)


def achievable_rate(gamma, kappa: float):
    return (1.0 - kappa) * np.log2(1.0 + np.asarray(gamma, dtype=float))


def serving_count(power: np.ndarray) -> np.ndarray:
    """Number of APs with nonzero power towards each VU (the l0 term)."""
    return (np.asarray(power) > 0).sum(axis=-1)


def backhaul_consumption(power: np.ndarray, rate) -> np.ndarray:
    return serving_count(power) * np.asarray(rate, dtype=float)


def energy_efficiency(backhaul, total_power):
    backhaul = np.asarray(backhaul, dtype=float)
    total_power = np.asarray(total_power, dtype=float)
    num = backhaul.sum(axis=-1)
    out = np.divide(num, total_power, out=np.zeros_like(num), where=total_power > 0)
    return out if out.ndim else float(out)


def reward(ee, gamma, sinr_min: float):
    """Gated EE: the EE if every VU meets the SINR floor, else 0."""
    ok = np.all(np.asarray(gamma) >= sinr_min, axis=-1)
    out = np.where(ok, ee, 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LinkBudget:
    sinr: np.ndarray  # (..., U)
    rate: np.ndarray  # (..., U)
    serving_count: np.ndarray  # (..., U)
    backhaul: np.ndarray  # (..., U)
    total_power: np.ndarray  # (...)
    ee: np.ndarray  # (...)
    reward: np.ndarray  # (...)
    gate_failed: np.ndarray  # (...) some VU below the SINR floor


def link_budget(chan: ChannelRealization, power: np.ndarray, cfg: ScenarioConfig) -> LinkBudget:
    return budget_from_gains(effective_gains(chan, power), power, cfg)


def budget_from_gains(gains: np.ndarray, power: np.ndarray, cfg: ScenarioConfig) -> LinkBudget:
    power = np.asarray(power, dtype=float)
    gamma = sinr(gains, cfg.noise_power)
    rate = achievable_rate(gamma, cfg.kappa)
    count = serving_count(power)
    c = count * rate
    total = power.sum(axis=(-2, -1))
    ee = np.asarray(energy_efficiency(c, total))
    return LinkBudget(sinr=gamma, rate=rate, serving_count=count, backhaul=c,
                      total_power=total, ee=ee, reward=np.asarray(reward(ee, gamma, cfg.sinr_min)),
                      gate_failed=np.any(gamma < cfg.sinr_min, axis=-1))


def batch_reward(chan: ChannelRealization, power: np.ndarray, cfg: ScenarioConfig) -> np.ndarray:
    """Gated EE for a ``(M, U, A)`` stack of allocations."""
    return link_budget(chan, power, cfg).reward


def reward_table(cross: np.ndarray, power: np.ndarray, cfg: ScenarioConfig, chunk: int = 4096) -> np.ndarray:
    """Rewards ``(T, M)`` of ``M`` allocations over ``T`` frozen channels.

    ``cross`` is ``(T, U, U, A)``; ``power`` is ``(M, U, A)`` or per-step ``(T, M, U, A)``.
    """
    T, M = cross.shape[0], power.shape[-3]
    out = np.empty((T, M))
    for lo in range(0, M, chunk):
        p = power[..., lo:lo + chunk, :, :]
        if p.ndim == 3:
            p = np.broadcast_to(p, (T, *p.shape))
        g = gains_from_cross(cross[:, None], p)
        out[:, lo:lo + chunk] = budget_from_gains(g, p, cfg).reward
    return out
