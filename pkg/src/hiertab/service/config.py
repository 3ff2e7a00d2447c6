"""Service configuration: one TOML/JSON document plus env-var overrides."""

from __future__ import annotations

import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..env import EpisodeConfig, RewardWeights
from ..insight import DEFAULT_CONFIG, DetectorConfig


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    data_dir: str = "./sessions"
    checkpoint: Optional[str] = None
    total_steps: int = 200
    stage_ratio: float = 0.04
    eta_coverage: float = 1.0
    eta_insight: float = 1.0
    eta_evenness: float = 1.0
    intrinsic_lam: float = 0.5
    detectors: DetectorConfig = field(default_factory=lambda: DEFAULT_CONFIG)

    def episode_config(self, seed: int = 0) -> EpisodeConfig:
        return EpisodeConfig(
            total_steps=self.total_steps,
            stage_ratio=self.stage_ratio,
            weights=RewardWeights(
                eta_coverage=self.eta_coverage,
                eta_insight=self.eta_insight,
                eta_evenness=self.eta_evenness,
            ),
            detectors=self.detectors,
            seed=seed,
        )


def load_config(path: Optional[str | Path] = None) -> ServiceConfig:
    """Read config from a TOML or JSON file; HIERTAB_PORT and
    HIERTAB_DATA_DIR env vars win over the file."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if path.suffix == ".toml":
            raw = tomllib.loads(path.read_text())
        else:
            raw = json.loads(path.read_text())
    detector_raw = raw.pop("detectors", {})
    detectors = replace(DEFAULT_CONFIG, **detector_raw)
    known = {f.name for f in fields(ServiceConfig)} - {"detectors"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    config = ServiceConfig(**raw, detectors=detectors)
    if "HIERTAB_PORT" in os.environ:
        config = replace(config, port=int(os.environ["HIERTAB_PORT"]))
    if "HIERTAB_DATA_DIR" in os.environ:
        config = replace(config, data_dir=os.environ["HIERTAB_DATA_DIR"])
    return config
