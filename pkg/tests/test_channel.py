import csv

import numpy as np
import pytest

from ecovedge.channel import (ChannelRealization, draw_fast_fading, draw_shadowing_db, dump_channel_trace,
                              path_loss_db, realize_channel, realize_trajectory)
from ecovedge.config import FadingParams
from ecovedge.scenario import VehicleState, build_topology


def test_path_loss_examples():
    p = FadingParams()
    assert path_loss_db(1000.0, p) == pytest.approx(128.1)
    assert path_loss_db(100.0, p) == pytest.approx(90.5)
    assert path_loss_db(0.0, p) == pytest.approx(path_loss_db(p.min_distance, p))
    np.testing.assert_allclose(path_loss_db([10.0, 1000.0], p), [128.1 - 2 * 37.6, 128.1])


def test_shadowing():
    assert np.all(draw_shadowing_db(np.random.default_rng(0), FadingParams(shadowing_std=0.0), 100) == 0)
    x = draw_shadowing_db(np.random.default_rng(1), FadingParams(), 100_000)
    assert abs(x.mean()) < 0.1
    assert x.std() == pytest.approx(8.0, rel=0.02)
    a = draw_shadowing_db(np.random.default_rng(5), FadingParams(), 10)
    np.testing.assert_array_equal(a, draw_shadowing_db(np.random.default_rng(5), FadingParams(), 10))


def test_fast_fading_moments():
    z = draw_fast_fading(np.random.default_rng(2), 100_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(z.real.mean()) < 0.02 and abs(z.imag.mean()) < 0.02
    np.testing.assert_array_equal(draw_fast_fading(np.random.default_rng(3), (2, 4)),
                                  draw_fast_fading(np.random.default_rng(3), (2, 4)))
    with pytest.raises(ValueError):
        draw_fast_fading(np.random.default_rng(3), 0)


def ones(rng, shape):
    return np.ones(shape, dtype=complex)


def test_deterministic_composition(paper):
    cfg = paper.replace(shadowing_std=0.0)
    topo = build_topology(cfg)
    chan = realize_channel(VehicleState(100.0, (0, 1, 2)), topo, cfg, np.random.default_rng(0), fast_fading=ones)
    expected = np.sqrt(cfg.ap_antennas) * 10 ** (-chan.path_loss_db / 20)
    np.testing.assert_allclose(chan.norms, expected, rtol=1e-12)
    np.testing.assert_allclose(chan.norms, np.linalg.norm(chan.h, axis=2))
    assert chan.shape == (3, 3, 8)
    assert chan.stacked(1).shape == (24,)


def test_distance_doubling_energy(paper):
    cfg = paper.replace(shadowing_std=0.0, ap_count=1, vu_count=1, lanes=1, ap_y=0.0, lane_width=0.0)
    topo = build_topology(cfg.replace(coverage_radius=1e4))
    # VU purely along x from the AP at x=250
    near = [VehicleState(350.0, (0,))] * 20000
    far = [VehicleState(450.0, (0,))] * 20000
    rng = np.random.default_rng(4)
    h1, *_ = realize_trajectory(near, topo, cfg, rng)
    h2, *_ = realize_trajectory(far, topo, cfg, rng)
    drop = 10 * np.log10(np.mean(np.abs(h1) ** 2) / np.mean(np.abs(h2) ** 2))
    assert drop == pytest.approx(37.6 * np.log10(2), abs=0.1)
    assert 37.6 * np.log10(2) == pytest.approx(11.32, abs=0.005)


def test_colocated_vus_independent(paper):
    cfg = paper.replace(shadowing_std=0.0)
    topo = build_topology(cfg)
    states = [VehicleState(200.0, (1, 1, 1))] * 5000
    h, *_ = realize_trajectory(states, topo, cfg, np.random.default_rng(6))
    a, b = h[:, 0, 0, 0], h[:, 1, 0, 0]
    corr = np.abs(np.mean(a * b.conj())) / np.sqrt(np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2))
    assert corr < 0.05


def test_trace_dump(tmp_path, paper):
    topo = build_topology(paper)
    chan = realize_channel(VehicleState(10.0, (0, 1, 2)), topo, paper, np.random.default_rng(0))
    dump_channel_trace(tmp_path / "t.csv", [(0, chan), (1, chan)])
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert len(rows) == 18
    assert float(rows[0]["block_norm"]) == pytest.approx(chan.norms[0, 0], rel=1e-8)


def test_realization_is_frozen():
    chan = ChannelRealization(np.ones((1, 1, 2), dtype=complex), np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(Exception):
        chan.h = None
