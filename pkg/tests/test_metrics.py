import numpy as np
import pytest

from ecovedge.metrics import (EpisodeLog, SummaryStats, average_ee, compare_schemes, db_gain, deviation_percent,
                              format_table, jain, jain_index, jain_index_pooled, read_episode_logs,
                              success_probability, summarize, write_episode_logs)


def make_log(reward, backhaul=None, failed=None, ep=0):
    T = len(reward)
    backhaul = np.ones((T, 3)) if backhaul is None else np.asarray(backhaul, dtype=float)
    failed = np.zeros(T, dtype=bool) if failed is None else np.asarray(failed)
    return EpisodeLog(ep, np.arange(T), np.zeros(T, dtype=int), np.ones((T, 3)), backhaul / 2, backhaul,
                      np.ones(T), np.asarray(reward, dtype=float), np.asarray(reward, dtype=float), failed)


def test_success_probability():
    assert success_probability([make_log([1.0] * 10)]) == 1.0
    assert success_probability([make_log([0.0] * 10, failed=[True] * 10)]) == 0.0
    failed = np.zeros(250, dtype=bool)
    failed[:25] = True
    assert success_probability([make_log(np.ones(250), failed=failed)]) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        success_probability([])


def test_gate_agreement():
    r = np.array([2.0, 0.0, 3.0, 0.0])
    log = make_log(r, failed=r == 0)
    assert 1 - success_probability([log]) == pytest.approx(np.mean(log.reward == 0))


def test_jain():
    assert jain([2.0, 2.0, 2.0]) == pytest.approx(1.0)
    assert jain([5.0, 0.0, 0.0]) == pytest.approx(1 / 3)
    assert jain([1.0, 2.0, 3.0]) == pytest.approx(jain([10.0, 20.0, 30.0]))
    with pytest.raises(ValueError):
        jain([0.0, 0.0])


def test_jain_variants():
    c = np.array([[1.0, 1.0, 1.0], [3.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    log = make_log([1.0, 1.0, 1.0], backhaul=c)
    assert jain_index([log]) == pytest.approx((1.0 + 1 / 3) / 2)
    assert jain_index_pooled([log]) == pytest.approx(jain([4.0, 1.0, 1.0]))


def test_average_ee_and_gains():
    assert average_ee([make_log([2.0] * 5)]) == 2.0
    assert deviation_percent(2.0, 1.5) == pytest.approx(25.0)
    assert deviation_percent(2.0, 2.0) == 0.0
    assert db_gain(10.0, 1.0) == pytest.approx(10.0)


def stats(name, ee):
    return SummaryStats(name, 0, 250, 1000, ee, 0.0, ee, 0.9, 0.9, 0.99)


def test_compare_schemes():
    rows = compare_schemes([stats(s, v) for s, v in
                            [("brute", 2.0), ("dmarl", 1.99), ("sarl", 1.98), ("marl", 1.9),
                             ("equal", 0.02), ("random", 0.2)]])
    assert [r["scheme"] for r in rows] == ["brute", "dmarl", "sarl", "marl", "equal", "random"]
    assert rows[0]["deviation_pct"] == 0.0
    assert rows[1]["gain_vs_equal_db"] == pytest.approx(10 * np.log10(1.99 / 0.02))
    text = format_table(rows, "Table")
    assert "Brute Force (Benchmark)" in text and "0 % (Benchmark)" in text
    assert len(text.splitlines()) == 1 + 3 + 6 + 1
    with pytest.raises(ValueError):
        compare_schemes([stats("dmarl", 1.0)])


def test_summary_and_csv_roundtrip(tmp_path):
    logs = [make_log([1.0, 2.0, 0.0], failed=[False, False, True], ep=e) for e in range(3)]
    s = summarize("brute", logs)
    assert s.steps == 9 and s.test_episodes == 3
    assert s.average_ee == pytest.approx(1.0) and s.success == pytest.approx(2 / 3)
    path = tmp_path / "e.csv"
    write_episode_logs(path, "brute", logs)
    scheme, back = read_episode_logs(path)
    assert scheme == "brute" and len(back) == 3
    np.testing.assert_allclose(back[1].reward, logs[1].reward)
    np.testing.assert_array_equal(back[2].gate_failed, logs[2].gate_failed)
