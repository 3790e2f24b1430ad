"""Service configuration: one JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from culturecolor.dataset.records import DEFAULT_CATEGORIES

ENV_PREFIX = "CULTURECOLOR_"


@dataclass
class ServiceConfig:
    categories: list[str] = field(default_factory=lambda: list(DEFAULT_CATEGORIES))
    palette_model: str | None = None
    colorizer_model: str | None = None
    data_dir: str = "./culturecolor-data"
    host: str = "127.0.0.1"
    port: int = 8000
    session_ttl_seconds: float = 3600.0

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        """Read the config file (if any), then apply environment overrides.

        Env vars: CULTURECOLOR_PORT, CULTURECOLOR_HOST, CULTURECOLOR_DATA_DIR,
        CULTURECOLOR_PALETTE_MODEL, CULTURECOLOR_COLORIZER_MODEL.
        """
        values: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            if "categories_path" in raw:
                values["categories"] = json.loads(
                    Path(raw.pop("categories_path")).read_text(encoding="utf-8")
                )
            known = {f for f in cls.__dataclass_fields__}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(raw)

        config = cls(**values)
        if os.environ.get(ENV_PREFIX + "PORT"):
            config.port = int(os.environ[ENV_PREFIX + "PORT"])
        if os.environ.get(ENV_PREFIX + "HOST"):
            config.host = os.environ[ENV_PREFIX + "HOST"]
        if os.environ.get(ENV_PREFIX + "DATA_DIR"):
            config.data_dir = os.environ[ENV_PREFIX + "DATA_DIR"]
        if os.environ.get(ENV_PREFIX + "PALETTE_MODEL"):
            config.palette_model = os.environ[ENV_PREFIX + "PALETTE_MODEL"]
        if os.environ.get(ENV_PREFIX + "COLORIZER_MODEL"):
            config.colorizer_model = os.environ[ENV_PREFIX + "COLORIZER_MODEL"]
        return config
