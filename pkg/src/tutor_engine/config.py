"""Engine configuration: one file, environment variables override."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class EngineConfig:
    # pipeline knobs
    self_consistency_n: int = 5
    similarity_threshold: float = 0.6
    retrieval_k: int = 4
    retrieval_tag_weight: float = 0.7
    retrieval_ilo_weight: float = 0.3
    token_budget: int = 3000
    temperature: float = 0.7
    max_output_tokens: int = 800
    # gateway
    backend: str = "scripted"  # "scripted" | "remote"
    scripted_dir: str | None = None
    parallelism: int = 5
    timeout_s: float = 60.0
    llm_url: str | None = None
    llm_model: str | None = None
    llm_key: str | None = None
    # service
    data_dir: str = "./tutor-data"
    port: int = 8080
    snapshot_interval: int = 50
    ui_dir: str | None = None


_ENV_OVERRIDES = {
    "ENGINE_LLM_URL": "llm_url",
    "ENGINE_LLM_MODEL": "llm_model",
    "ENGINE_LLM_KEY": "llm_key",
    "TUTOR_DATA_DIR": "data_dir",
}


def load_config(path: str | Path | None = None) -> EngineConfig:
    """Defaults, then the JSON config file, then environment variables."""
    config = EngineConfig()
    known = {f.name: f for f in fields(EngineConfig)}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, value in raw.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            setattr(config, key, value)
    for env_name, attr in _ENV_OVERRIDES.items():
        value = os.environ.get(env_name)
        if value:
            setattr(config, attr, value)
    return config
