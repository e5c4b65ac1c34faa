from .config import ConfigError, ScenarioConfig, validate_config
from .runner import RunManifest, run_scenario
from .scenarios import list_scenarios

__all__ = ["ConfigError", "ScenarioConfig", "validate_config", "RunManifest", "run_scenario",
           "list_scenarios"]
