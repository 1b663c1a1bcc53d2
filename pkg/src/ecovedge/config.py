"""Scenario configuration, shipped presets, and the flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Raised for configurations that violate a model constraint."""


@dataclass(frozen=True)
class FadingParams:
    pathloss_intercept: float = 128.1  # dB at 1 km
    pathloss_exponent_coeff: float = 37.6  # dB per decade
    shadowing_std: float = 8.0  # dB
    min_distance: float = 1.0  # m

    def __post_init__(self):
        if self.shadowing_std < 0:
            raise ConfigError("shadowing_std must be >= 0")
        if self.min_distance <= 0:
            raise ConfigError("min_distance must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    # road
    roi_length: float = 500.0
    lanes: int = 3
    lane_width: float = 4.0
    ap_y: float = -5.0
    vu_count: int = 3
    ap_count: int = 3
    ap_spacing: float = 150.0
    vu_speed: float = 140.0  # km/h
    tti: float = 0.1  # s
    # radio
    ap_antennas: int = 8
    coverage_radius: float = 250.0
    sinr_min_db: float = 10.0
    noise_psd_dbm: float = -114.0
    kappa: float = 0.1
    p_max: float = 1.0  # W per AP
    power_levels: int = 4
    fading: FadingParams = field(default_factory=FadingParams)
    # action space: "coverage" (association from the coverage rule) or "learned"
    action_mode: str = "coverage"
    # learning
    discount: float = 0.8
    eps_start: float = 1.0
    eps_end: float = 0.01
    alpha_start: float = 1.0
    alpha_end: float = 0.01
    dmarl_agents: int = 4
    # "stored": challenger must beat the register's best reward so far;
    # "current": challenger must beat the register action's reward on the same TTI
    register_compare: str = "stored"
    q_init_high: float = 0.01
    rng_seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        if self.roi_length <= 0:
            raise ConfigError("roi_length must be > 0")
        for key in ("vu_count", "ap_count", "power_levels", "lanes", "ap_antennas"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if not 0.0 <= self.kappa < 1.0:
            raise ConfigError("kappa must lie in [0, 1)")
        if self.tti <= 0 or self.vu_speed <= 0:
            raise ConfigError("tti and vu_speed must be > 0")
        if self.p_max <= 0:
            raise ConfigError("p_max must be > 0")
        if self.action_mode not in ("coverage", "learned"):
            raise ConfigError(f"unknown action_mode {self.action_mode!r}")
        if self.register_compare not in ("stored", "current"):
            raise ConfigError(f"unknown register_compare {self.register_compare!r}")
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError("discount must lie in [0, 1)")
        if self.eps_start < self.eps_end or self.eps_end < 0:
            raise ConfigError("need eps_start >= eps_end >= 0")
        if self.alpha_start < self.alpha_end or self.alpha_end < 0:
            raise ConfigError("need alpha_start >= alpha_end >= 0")

    # derived quantities
    @property
    def step_length(self) -> float:
        """Distance travelled in one TTI (m)."""
        return self.vu_speed / 3.6 * self.tti

    @property
    def n_states(self) -> int:
        return math.ceil(self.roi_length / self.step_length)

    @property
    def sinr_min(self) -> float:
        return 10.0 ** (self.sinr_min_db / 10.0)

    @property
    def noise_power(self) -> float:
        """Noise power in W over the normalized 1 Hz bandwidth."""
        return 10.0 ** ((self.noise_psd_dbm - 30.0) / 10.0)

    @property
    def lane_y(self) -> list[float]:
        return [self.lane_width * (k + 0.5) for k in range(self.lanes)]

    def replace(self, **changes) -> "ScenarioConfig":
        fading_changes = {k: changes.pop(k) for k in list(changes) if k in _FADING_KEYS}
        if fading_changes:
            changes["fading"] = dataclasses.replace(self.fading, **fading_changes)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "fading":
                out.update(dataclasses.asdict(self.fading))
            else:
                out[f.name] = getattr(self, f.name)
        return out


_FADING_KEYS = {f.name for f in fields(FadingParams)}
_TYPES = {f.name: f.type for f in fields(ScenarioConfig)} | {f.name: f.type for f in fields(FadingParams)}


def paper_preset(**overrides) -> ScenarioConfig:
    return ScenarioConfig(name="paper").replace(**overrides)


def tiny_preset(**overrides) -> ScenarioConfig:
    # K=2 leaves a single feasible power tuple per fully covered AP, so the tiny
    # instance learns associations as well as powers.
    base = ScenarioConfig(
        name="tiny", vu_count=2, ap_count=2, power_levels=2, roi_length=200.0,
        action_mode="learned", dmarl_agents=4,
    )
    return base.replace(**overrides)


PRESETS = {"paper": paper_preset, "tiny": tiny_preset}


def get_preset(preset: str, /, **overrides) -> ScenarioConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    return PRESETS[preset](**overrides)


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def config_from_mapping(values: dict[str, str]) -> ScenarioConfig:
    values = dict(values)
    preset = values.pop("preset", "paper")
    unknown = set(values) - set(_TYPES) - {"fading"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return get_preset(preset, **{k: _coerce(k, v) for k, v in values.items()})


def load_config(path: str | Path) -> ScenarioConfig:
    return config_from_mapping(parse_kv(Path(path).read_text()))


def dump_config(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())
