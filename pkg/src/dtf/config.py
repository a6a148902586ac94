"""Pipeline configuration: one JSON file describing a running twin.

Resolution order: explicit path, then the DT_CONFIG environment
variable, then built-in defaults (shipped sensor specs and rules,
temporary log directory). Command line flags override file values.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

ENV_CONFIG = "DT_CONFIG"
ENV_TOKEN = "DT_API_TOKEN"


def packaged_data(name: str) -> Path:
    """Path of a data file shipped inside the package."""
    return Path(str(resources.files("dtf") / "data" / name))


@dataclass(frozen=True)
class PipelineConfig:
    log_root: str = "./twin-log"
    specs_path: str = ""
    rules_paths: tuple[str, ...] = ()
    routes_path: str = ""
    policy_style: str = "moderate"
    policy_threshold: float | None = None
    window_size: int = 30
    z: float = 1.96
    debounce: int = 3
    broker_host: str = "127.0.0.1"
    broker_port: int = 0  # 0 = pick a free port
    api_host: str = "127.0.0.1"
    api_port: int = 8000
    topic_filter: str = "plant/+/+"
    webhook_url: str = ""
    models_dir: str = "./models"
    queue_capacity: int = 1024

    def __post_init__(self) -> None:
        if self.window_size < 2:
            raise ConfigError(f"window_size must be ≥ 2, got {self.window_size}")
        if self.z <= 0:
            raise ConfigError(f"z must be positive, got {self.z}")
        if self.debounce < 1:
            raise ConfigError(f"debounce must be ≥ 1, got {self.debounce}")
        if self.queue_capacity < 1:
            raise ConfigError(f"queue_capacity must be ≥ 1, got {self.queue_capacity}")
        if self.policy_threshold is not None and not 0.0 <= self.policy_threshold <= 1.0:
            raise ConfigError(f"policy_threshold outside [0, 1]: {self.policy_threshold}")

    def resolved(self) -> "PipelineConfig":
        """Fill empty file fields with the packaged defaults."""
        updates = {}
        if not self.specs_path:
            updates["specs_path"] = str(packaged_data("sensor_specs.json"))
        if not self.rules_paths:
            updates["rules_paths"] = (
                str(packaged_data("smart_maintenance_rules.json")),
                str(packaged_data("sensor_equipment_rules.json")),
            )
        if not self.routes_path:
            updates["routes_path"] = str(packaged_data("routes.json"))
        return dataclasses.replace(self, **updates) if updates else self

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        """Apply non-None overrides (command line flags win)."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return dataclasses.replace(self, **updates) if updates else self

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def load_config(path: str | Path | None = None) -> PipelineConfig:
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return PipelineConfig().resolved()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "rules_paths" in doc:
        doc["rules_paths"] = tuple(doc["rules_paths"])
    try:
        return PipelineConfig(**doc).resolved()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
