"""Service configuration: JSON config file with environment overrides.

Every field has a default, so a bare ``ServiceConfig()`` runs a local
instance out of ./data. Environment variables named LUSKIT_<FIELD>
override both defaults and file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..analyzer import AnalyzerParams
from ..pipeline import PipelineConfig
from ..render import OverlayStyle
from ..summarizer import SummarizerParams
from ..videoio import DecoderConfig

_ENV_PREFIX = "LUSKIT_"


@dataclass
class ServiceConfig:
    data_root: str = "./data"
    host: str = "127.0.0.1"
    port: int = 8000
    workers: int = min(4, os.cpu_count() or 1)
    max_videos: int = 16
    max_upload_bytes: int = 256 * 1024 * 1024
    max_frames: int = 2000
    max_pixels_per_frame: int = 4_000_000
    ttl_seconds: int = 7 * 24 * 3600
    sweep_interval_seconds: int = 3600
    external_decoder_cmd: str | None = None
    summarizer: str = "reference"
    analyzer: str = "reference"
    static_dir: str | None = None
    summarizer_params: dict = field(default_factory=dict)
    analyzer_params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("workers", "max_videos", "max_upload_bytes", "max_frames",
                     "max_pixels_per_frame", "ttl_seconds", "sweep_interval_seconds",
                     "port"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            decoder=DecoderConfig(
                external_decoder_cmd=self.external_decoder_cmd,
                max_frames=self.max_frames,
                max_pixels_per_frame=self.max_pixels_per_frame,
            ),
            summarizer=self.summarizer,
            analyzer=self.analyzer,
            summarizer_params=SummarizerParams(**self.summarizer_params),
            analyzer_params=AnalyzerParams(**self.analyzer_params),
            style=OverlayStyle(),
        )


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ServiceConfig:
    """Merge file values, LUSKIT_* environment variables, and explicit
    overrides (weakest to strongest)."""
    values: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        unknown = set(raw) - {f.name for f in fields(ServiceConfig)}
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(raw)

    for f in fields(ServiceConfig):
        env = os.environ.get(_ENV_PREFIX + f.name.upper())
        if env is None:
            continue
        if f.name in ("summarizer_params", "analyzer_params"):
            values[f.name] = json.loads(env)
        elif f.type.startswith("int"):
            values[f.name] = int(env)
        else:
            values[f.name] = env

    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**values)
