"""Energy-efficient virtual-cell formation and power allocation for a freeway V2I edge network."""

from ecovedge.config import ScenarioConfig, ConfigError, paper_preset, tiny_preset, get_preset

__version__ = "0.1.0"

__all__ = ["ScenarioConfig", "ConfigError", "paper_preset", "tiny_preset", "get_preset", "__version__"]
