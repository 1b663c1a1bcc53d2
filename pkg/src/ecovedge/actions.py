"""Discrete joint action space: association bits x per-link power levels.

An action is a ``(U, A)`` integer level matrix. Level ``k >= 1`` on link
``(i, j)`` means AP ``j`` transmits ``p_max * k / K`` towards VU ``i``; level 0
means the link is not part of VU ``i``'s virtual cell.

Canonical order is lexicographic on ``(association bits, levels)``, both
flattened AP-major (all VUs of AP 0, then AP 1, ...). The order is produced
directly by :func:`iter_actions`, so large catalogs can be streamed.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

from ecovedge.config import ConfigError, ScenarioConfig

COVERAGE = "coverage"
LEARNED = "learned"


@dataclass(frozen=True)
class PowerGrid:
    K: int
    p_max: float

    @property
    def levels(self) -> np.ndarray:
        return self.p_max * np.arange(1, self.K + 1) / self.K

    def watts(self, level_index):
        return self.p_max * np.asarray(level_index, dtype=float) / self.K

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "PowerGrid":
        return cls(cfg.power_levels, cfg.p_max)


@dataclass(frozen=True)
class Action:
    levels: tuple[tuple[int, ...], ...]  # (U, A)
    mode: str = LEARNED

    @classmethod
    def from_array(cls, levels, mode: str = LEARNED) -> "Action":
        return cls(tuple(tuple(int(v) for v in row) for row in np.asarray(levels)), mode)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.levels, dtype=np.int64)

    @property
    def association(self) -> np.ndarray:
        return self.array > 0

    def power(self, grid: PowerGrid, assoc: np.ndarray | None = None) -> np.ndarray:
        p = grid.watts(self.array)
        return p if assoc is None else p * np.asarray(assoc, dtype=bool)


def _level_tuples(n: int, K: int) -> list[tuple[int, ...]]:
    """Tuples in {1..K}^n with sum <= K, lexicographic."""
    return [t for t in itertools.product(range(1, K + 1), repeat=n) if sum(t) <= K]


def ap_options(served: np.ndarray, K: int, mode: str) -> list[tuple[int, ...]]:
    """Level vectors (over all U VUs) one AP may choose, in canonical order.

    ``served`` marks VUs the AP may serve. In coverage mode the AP serves exactly
    the covered VUs; in learned mode any nonempty subset of them.
    """
    served = np.asarray(served, dtype=bool)
    U = len(served)
    if mode == COVERAGE:
        subsets = [tuple(int(b) for b in served)]
    else:
        subsets = [bits for bits in itertools.product((0, 1), repeat=U)
                   if any(bits) and all(served[i] or not b for i, b in enumerate(bits))]
    out = []
    for bits in subsets:
        members = [i for i, b in enumerate(bits) if b]
        if not members:
            out.append((0,) * U)
            continue
        for t in _level_tuples(len(members), K):
            vec = [0] * U
            for i, k in zip(members, t):
                vec[i] = k
            out.append(tuple(vec))
    return out


def _split_bits(options: list[tuple[int, ...]]) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    groups: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for vec in options:
        groups.setdefault(tuple(int(v > 0) for v in vec), []).append(vec)
    return dict(sorted(groups.items()))


def _template(cfg: ScenarioConfig, mode: str, assoc_hint) -> np.ndarray:
    shape = (cfg.vu_count, cfg.ap_count)
    if assoc_hint is None:
        return np.ones(shape, dtype=bool)
    hint = np.asarray(assoc_hint, dtype=bool)
    if hint.shape != shape:
        raise ConfigError(f"association hint has shape {hint.shape}, expected {shape}")
    return hint


def iter_actions(cfg: ScenarioConfig, mode: str | None = None, assoc_hint=None) -> Iterator[np.ndarray]:
    """Stream every feasible level matrix in canonical order.

    ``assoc_hint`` is the fixed association in coverage mode (default: every
    link on) and restricts the allowed links in learned mode.
    """
    mode = mode or cfg.action_mode
    tmpl = _template(cfg, mode, assoc_hint)
    U, A, K = cfg.vu_count, cfg.ap_count, cfg.power_levels
    if mode == COVERAGE and not tmpl.any(axis=1).all():
        return
    groups = [_split_bits(ap_options(tmpl[:, j], K, mode)) for j in range(A)]
    for bit_choice in itertools.product(*[list(g) for g in groups]):
        covered = np.zeros(U, dtype=bool)
        for bits in bit_choice:
            covered |= np.asarray(bits, dtype=bool)
        if not covered.all():
            continue
        for vecs in itertools.product(*[g[b] for g, b in zip(groups, bit_choice)]):
            yield np.array(vecs, dtype=np.int64).T


def raw_cardinality(cfg: ScenarioConfig, mode: str | None = None) -> int:
    """Unfiltered action count: (2^U - 1)^A * K^(UA) learned, K^(UA) coverage (all links on)."""
    mode = mode or cfg.action_mode
    U, A, K = cfg.vu_count, cfg.ap_count, cfg.power_levels
    if mode == COVERAGE:
        return K ** (U * A)
    return (2 ** U - 1) ** A * K ** (U * A)


def per_ap_raw_cardinality(cfg: ScenarioConfig) -> int:
    return (2 ** cfg.vu_count - 1) * cfg.power_levels ** cfg.vu_count


def is_feasible(levels, cfg: ScenarioConfig) -> bool:
    """Per-AP power budget holds and every VU has at least one serving AP."""
    levels = np.asarray(levels.array if isinstance(levels, Action) else levels)
    if levels.shape != (cfg.vu_count, cfg.ap_count):
        return False
    if np.any(levels < 0) or np.any(levels > cfg.power_levels):
        return False
    if np.any(levels.sum(axis=0) > cfg.power_levels):
        return False
    return bool((levels > 0).any(axis=1).all())


@dataclass
class ActionCatalog:
    levels: np.ndarray  # (M, U, A) int
    mode: str
    K: int
    p_max: float
    template: np.ndarray  # (U, A) bool
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {row.tobytes(): n for n, row in enumerate(self.levels)}
        if len(self._index) != len(self.levels):
            raise ValueError("duplicate actions in catalog")

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def grid(self) -> PowerGrid:
        return PowerGrid(self.K, self.p_max)

    @cached_property
    def powers(self) -> np.ndarray:
        return self.grid.watts(self.levels)

    def masked_powers(self, assoc: np.ndarray | None) -> np.ndarray:
        """Catalog powers with links outside ``assoc`` switched off."""
        if assoc is None:
            return self.powers
        return self.powers * np.asarray(assoc, dtype=bool)[None]

    def decode(self, index: int) -> Action:
        if not 0 <= index < len(self):
            raise IndexError(f"action index {index} outside [0, {len(self)})")
        return Action.from_array(self.levels[index], self.mode)

    def encode(self, action: Action | np.ndarray) -> int:
        arr = action.array if isinstance(action, Action) else np.asarray(action, dtype=np.int64)
        try:
            return self._index[arr.astype(np.int64).tobytes()]
        except KeyError:
            raise KeyError("action is not a member of this catalog (infeasible or wrong mode)") from None

    @cached_property
    def hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.mode}|{self.K}|{self.p_max!r}|".encode())
        h.update(self.template.astype(np.uint8).tobytes())
        h.update(self.levels.astype(np.int64).tobytes())
        return h.hexdigest()[:16]

    def summary(self) -> dict:
        return {"M": len(self), "mode": self.mode, "K": self.K, "hash": self.hash}


def enumerate_actions(cfg: ScenarioConfig, mode: str | None = None, assoc_hint=None,
                      limit: int = 2_000_000) -> ActionCatalog:
    """Materialize the feasible catalog; refuses catalogs larger than ``limit``."""
    mode = mode or cfg.action_mode
    tmpl = _template(cfg, mode, assoc_hint)
    rows = []
    for lv in iter_actions(cfg, mode, tmpl):
        rows.append(lv)
        if len(rows) > limit:
            raise ConfigError(f"catalog exceeds {limit} actions; stream it with iter_actions")
    if not rows:
        raise ConfigError("no feasible action for this configuration")
    levels = np.stack(rows)
    return ActionCatalog(levels=levels, mode=mode, K=cfg.power_levels, p_max=cfg.p_max, template=tmpl)


def per_ap_catalogs(cfg: ScenarioConfig, mode: str | None = None) -> list[np.ndarray]:
    """One ``(M_j, U)`` option table per AP, for independent per-AP learners."""
    mode = mode or cfg.action_mode
    served = np.ones(cfg.vu_count, dtype=bool)
    return [np.array(ap_options(served, cfg.power_levels, mode), dtype=np.int64)
            for _ in range(cfg.ap_count)]


@dataclass(frozen=True)
class Segment:
    agent: int
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo


def partition(M: int, N: int) -> list[Segment]:
    """Split ``[0, M)`` into ``N`` contiguous near-equal segments, larger ones first."""
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={M}")
    base, extra = divmod(M, N)
    out, lo = [], 0
    for n in range(N):
        hi = lo + base + (1 if n < extra else 0)
        out.append(Segment(n, lo, hi))
        lo = hi
    return out


def catalog_count_bruteforce(cfg: ScenarioConfig) -> tuple[int, int]:
    """Independent count for the all-links-on coverage catalog: (raw tuples, feasible)."""
    U, A, K = cfg.vu_count, cfg.ap_count, cfg.power_levels
    # iterate every tuple in {1..K}^(U*A) as base-K digits
    n_raw = K ** (U * A)
    codes = np.arange(n_raw, dtype=np.int64)
    digits = np.empty((n_raw, U * A), dtype=np.int64)
    for k in range(U * A):
        digits[:, k] = codes % K + 1
        codes //= K
    per_ap = digits.reshape(n_raw, A, U).sum(axis=2)
    return n_raw, int(np.all(per_ap <= K, axis=1).sum())


def feasible_count_closed_form(cfg: ScenarioConfig) -> int:
    """All-links-on coverage catalog size: C(K, U)^A tuples with per-AP sum <= K."""
    return math.comb(cfg.power_levels, cfg.vu_count) ** cfg.ap_count
