import itertools
import math

import numpy as np
import pytest

from ecovedge.actions import (COVERAGE, LEARNED, Action, PowerGrid, catalog_count_bruteforce, enumerate_actions,
                              feasible_count_closed_form, is_feasible, iter_actions, partition, per_ap_catalogs,
                              per_ap_raw_cardinality, raw_cardinality)
from ecovedge.config import ConfigError


def independent_learned(U, A, K):
    """Every (U, A) matrix over {0..K}: per-AP sum <= K, each AP serves someone, each VU is served."""
    out = []
    for flat in itertools.product(range(K + 1), repeat=U * A):
        m = np.array(flat).reshape(A, U).T
        if (m.sum(axis=0) <= K).all() and (m > 0).any(axis=0).all() and (m > 0).any(axis=1).all():
            out.append(m)
    return out


def test_single_link_catalog(paper):
    cfg = paper.replace(vu_count=1, ap_count=1, lanes=1)
    cat = enumerate_actions(cfg, LEARNED)
    assert len(cat) == 4
    np.testing.assert_allclose(cat.powers[:, 0, 0], [0.25, 0.5, 0.75, 1.0])


def test_three_vus_one_ap(paper):
    cfg = paper.replace(ap_count=1)
    assert raw_cardinality(cfg, COVERAGE) == 64
    cat = enumerate_actions(cfg, COVERAGE)
    assert len(cat) == math.comb(4, 3) == 4
    assert sorted(tuple(r[:, 0]) for r in cat.levels) == [(1, 1, 1), (1, 1, 2), (1, 2, 1), (2, 1, 1)]


def test_paper_counts(paper):
    assert raw_cardinality(paper, LEARNED) == 7 ** 3 * 4 ** 9 == 89_915_392
    assert per_ap_raw_cardinality(paper) == 448
    raw, feasible = catalog_count_bruteforce(paper)
    assert raw == 262_144
    assert feasible == len(enumerate_actions(paper, COVERAGE)) == feasible_count_closed_form(paper) == 64


def test_learned_counts_match_independent_filter(tiny):
    cat = enumerate_actions(tiny, LEARNED)
    ref = independent_learned(2, 2, 2)
    assert len(cat) == len(ref) == 17
    assert {m.tobytes() for m in cat.levels.astype(np.int64)} == {m.astype(np.int64).tobytes() for m in ref}


def test_paper_learned_catalog_size(paper):
    per_ap = per_ap_catalogs(paper, LEARNED)
    assert [len(o) for o in per_ap] == [34, 34, 34]
    n = sum(1 for _ in iter_actions(paper, LEARNED))
    assert n == 31_264


def test_canonical_order(tiny):
    cat = enumerate_actions(tiny, LEARNED)
    # AP-major flattening of (bits, levels)
    keys = [tuple((m.T > 0).ravel()) + tuple(m.T.ravel()) for m in cat.levels]
    assert keys == sorted(keys)
    assert cat.decode(0) == Action.from_array(cat.levels[0])


def test_roundtrip_random_indices(paper):
    cat = enumerate_actions(paper, LEARNED)
    rng = np.random.default_rng(0)
    for idx in rng.integers(len(cat), size=10_000):
        assert cat.encode(cat.decode(int(idx))) == idx


def test_encode_infeasible(tiny):
    cat = enumerate_actions(tiny, LEARNED)
    with pytest.raises(KeyError):
        cat.encode(np.array([[2, 2], [1, 0]]))
    with pytest.raises(IndexError):
        cat.decode(len(cat))


def test_is_feasible(paper):
    cfg = paper.replace(ap_count=1)
    assert not is_feasible(np.array([[4], [4], [4]]), cfg)
    assert is_feasible(np.array([[4]]), cfg.replace(vu_count=1))
    assert not is_feasible(np.array([[1, 0, 0], [0, 0, 0], [1, 1, 1]]), paper)
    assert not is_feasible(np.zeros((2, 2)), paper)


def test_catalog_members_feasible(tiny, paper):
    for cfg, mode in ((tiny, LEARNED), (paper, COVERAGE)):
        cat = enumerate_actions(cfg, mode)
        assert all(is_feasible(m, cfg) for m in cat.levels)
        assert np.all(cat.powers.sum(axis=1) <= cfg.p_max + 1e-12)


def test_partition():
    assert [s.size for s in partition(448, 4)] == [112] * 4
    assert partition(17, 1)[0].lo == 0 and partition(17, 1)[0].hi == 17
    assert [s.size for s in partition(10, 3)] == [4, 3, 3]
    segs = partition(31_264, 7)
    assert segs[0].lo == 0 and segs[-1].hi == 31_264
    assert all(a.hi == b.lo for a, b in zip(segs, segs[1:]))
    with pytest.raises(ValueError):
        partition(3, 4)


def test_coverage_association_catalog(paper):
    assoc = np.array([[1, 1, 0]] * 3, dtype=bool)
    cat = enumerate_actions(paper, COVERAGE, assoc)
    assert len(cat) == 4 * 4
    assert np.all(cat.levels[:, :, 2] == 0)
    masked = enumerate_actions(paper, COVERAGE).masked_powers(assoc)
    assert np.all(masked[:, :, 2] == 0)
    with pytest.raises(ConfigError):
        enumerate_actions(paper, COVERAGE, np.ones((2, 2)))


def test_grid_and_hash(tiny):
    assert PowerGrid(4, 2.0).levels.tolist() == [0.5, 1.0, 1.5, 2.0]
    a, b = enumerate_actions(tiny), enumerate_actions(tiny)
    assert a.hash == b.hash
    assert enumerate_actions(tiny.replace(p_max=2.0)).hash != a.hash
