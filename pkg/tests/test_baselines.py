import itertools

import numpy as np
import pytest

from ecovedge.actions import COVERAGE, LEARNED, enumerate_actions
from ecovedge.baselines import BudgetExceeded, brute_force, equal_power_action, random_power_action
from ecovedge.channel import realize_channel
from ecovedge.config import ConfigError, paper_preset
from ecovedge.scenario import VehicleState, build_topology


def single_link(sinr_min_db=-30.0):
    cfg = paper_preset(vu_count=1, ap_count=1, lanes=1, roi_length=400.0, sinr_min_db=sinr_min_db,
                       action_mode="learned")
    chan = realize_channel(VehicleState(150.0, (0,)), build_topology(cfg), cfg, np.random.default_rng(0))
    return cfg, chan


def test_single_link_scan():
    cfg, chan = single_link()
    cat = enumerate_actions(cfg)
    g2 = chan.norms[0, 0] ** 2
    ee = [(1 - cfg.kappa) * np.log2(1 + p * g2 / cfg.noise_power) / p for p in cat.powers[:, 0, 0]]
    res = brute_force(chan, cat, cfg)
    assert res.action_index == int(np.argmax(ee)) == 0  # EE falls with power here
    assert res.reward == pytest.approx(max(ee), rel=1e-9)
    assert res.scanned == 4


def test_all_candidates_gated():
    cfg, chan = single_link(sinr_min_db=300.0)
    res = brute_force(chan, enumerate_actions(cfg), cfg)
    assert res.reward == 0.0 and res.action_index == 0


def test_oracle_matches_independent_reenumeration(tiny):
    topo = build_topology(tiny)
    cat = enumerate_actions(tiny, LEARNED)
    rng = np.random.default_rng(9)
    U, A, K = 2, 2, 2
    for _ in range(10):
        chan = realize_channel(VehicleState(float(rng.uniform(0, 200)), (0, 1)), topo, tiny, rng)
        best = 0.0
        for flat in itertools.product(range(K + 1), repeat=U * A):
            lv = np.array(flat).reshape(U, A)
            if (lv.sum(axis=0) > K).any() or not (lv > 0).any(axis=1).all() or not (lv > 0).any(axis=0).all():
                continue
            P = tiny.p_max * lv / K
            g = np.zeros((U, U), dtype=complex)
            for i in range(U):
                for k in range(U):
                    for j in range(A):
                        if P[k, j] > 0:
                            hk = chan.h[k, j]
                            g[i, k] += np.vdot(chan.h[i, j], hk / np.linalg.norm(hk)) * np.sqrt(P[k, j])
            gam = [abs(g[i, i]) ** 2 / (tiny.noise_power + sum(abs(g[i, k]) ** 2 for k in range(U) if k != i))
                   for i in range(U)]
            if min(gam) >= tiny.sinr_min:
                c = sum((P[i] > 0).sum() * (1 - tiny.kappa) * np.log2(1 + gam[i]) for i in range(U))
                best = max(best, c / P.sum())
        assert brute_force(chan, cat, tiny).reward == pytest.approx(best, rel=1e-9)


def test_budget(paper):
    chan = realize_channel(VehicleState(10.0, (0, 1, 2)), build_topology(paper), paper, np.random.default_rng(0))
    with pytest.raises(BudgetExceeded):
        brute_force(chan, enumerate_actions(paper), paper, max_candidates=10)


def test_equal_power(paper):
    a = equal_power_action(np.array([[1, 1, 0], [1, 1, 0], [0, 1, 0]], dtype=bool), paper)
    np.testing.assert_array_equal(a.array, [[2, 1, 0], [2, 1, 0], [0, 1, 0]])
    b = equal_power_action(np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=bool), paper)
    np.testing.assert_array_equal(b.array, 4 * np.eye(3, dtype=int))
    with pytest.raises(ConfigError):
        equal_power_action(np.ones((3, 3), dtype=bool), paper.replace(power_levels=2))


def test_random_power(tiny, paper):
    cat = enumerate_actions(paper.replace(power_levels=1, vu_count=1, lanes=1), COVERAGE)
    assert len(cat) == 1
    assert random_power_action(cat, np.random.default_rng(0))[0] == 0
    cat = enumerate_actions(tiny, LEARNED)
    rng = np.random.default_rng(1)
    idx = np.array([random_power_action(cat, rng)[0] for _ in range(10_000)])
    counts = np.bincount(idx, minlength=len(cat))
    e = 10_000 / len(cat)
    assert ((counts - e) ** 2 / e).sum() < 39.25  # 16 dof, p = 0.001
    a = [random_power_action(cat, np.random.default_rng(4))[0] for _ in range(3)]
    assert len(set(a)) == 1
