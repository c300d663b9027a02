"""Service configuration: a JSON object of flat dotted keys.

Example::

    {
      "store.path": "store.bin",
      "manifest.path": "manifest.jsonl",
      "embedding.backend": "mock",
      "embedding.dimension": 128,
      "embedding.url": "http://embedder:9000",
      "llm.url": "https://api.example/v1/chat/completions",
      "llm.model": "gpt-4o",
      "drafting.examples_path": "examples.jsonl",
      "drafting.mock_gazetteer_path": "gazetteer.txt",
      "defaults.n_drafts": 6,
      "defaults.n_selected": 4,
      "defaults.k_per_draft": 600,
      "defaults.final_k": 600,
      "defaults.neighbor_radius": 5,
      "video_meta.path": "video_meta.jsonl",
      "video.fps_default": 25,
      "submit.url": "https://scoring.example/hook",
      "serve.host": "127.0.0.1",
      "serve.port": 8080,
      "ui.dist_path": "frontend/dist"
    }

Relative paths resolve against the config file's directory. Unknown keys
are rejected and all missing required keys are reported in one error.
The LLM API key is never stored in the file; it comes from the
``RAPID_LLM_API_KEY`` environment variable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError

REQUIRED_KEYS = ("store.path", "manifest.path", "embedding.backend", "embedding.dimension")

# dotted key -> (dataclass field, type, is_path)
KEY_MAP = {
    "store.path": ("store_path", str, True),
    "manifest.path": ("manifest_path", str, True),
    "embedding.backend": ("embedding_backend", str, False),
    "embedding.dimension": ("embedding_dimension", int, False),
    "embedding.url": ("embedding_url", str, False),
    "llm.url": ("llm_url", str, False),
    "llm.model": ("llm_model", str, False),
    "drafting.examples_path": ("examples_path", str, True),
    "drafting.mock_gazetteer_path": ("gazetteer_path", str, True),
    "defaults.n_drafts": ("n_drafts_default", int, False),
    "defaults.n_selected": ("n_selected_default", int, False),
    "defaults.k_per_draft": ("k_per_draft_default", int, False),
    "defaults.final_k": ("final_k_default", int, False),
    "defaults.neighbor_radius": ("neighbor_radius_default", int, False),
    "video_meta.path": ("video_meta_path", str, True),
    "video.fps_default": ("fps_default", float, False),
    "submit.url": ("submit_url", str, False),
    "serve.host": ("host", str, False),
    "serve.port": ("port", int, False),
    "ui.dist_path": ("ui_dist_path", str, True),
}


@dataclass
class ServiceConfig:
    store_path: Path
    manifest_path: Path
    embedding_backend: str
    embedding_dimension: int
    embedding_url: Optional[str] = None
    llm_url: Optional[str] = None
    llm_model: Optional[str] = None
    examples_path: Optional[Path] = None
    gazetteer_path: Optional[Path] = None
    n_drafts_default: int = 6
    n_selected_default: int = 4
    k_per_draft_default: int = 600
    final_k_default: int = 600
    neighbor_radius_default: int = 5
    video_meta_path: Optional[Path] = None
    fps_default: float = 25.0
    submit_url: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8080
    ui_dist_path: Optional[Path] = None
    base_dir: Path = Path(".")

    def validate(self) -> None:
        problems = []
        if self.embedding_backend not in ("mock", "http"):
            problems.append(
                f"embedding.backend must be 'mock' or 'http', got {self.embedding_backend!r}"
            )
        if self.embedding_backend == "http" and not self.embedding_url:
            problems.append("embedding.url is required when embedding.backend is 'http'")
        if self.embedding_dimension < 8:
            problems.append(f"embedding.dimension must be >= 8, got {self.embedding_dimension}")
        for name in (
            "n_drafts_default",
            "n_selected_default",
            "k_per_draft_default",
            "final_k_default",
        ):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.neighbor_radius_default < 0:
            problems.append("defaults.neighbor_radius must be >= 0")
        if self.fps_default <= 0:
            problems.append("video.fps_default must be > 0")
        for label, path in (
            ("store.path", self.store_path),
            ("manifest.path", self.manifest_path),
            ("drafting.examples_path", self.examples_path),
            ("drafting.mock_gazetteer_path", self.gazetteer_path),
            ("video_meta.path", self.video_meta_path),
            ("ui.dist_path", self.ui_dist_path),
        ):
            if path is not None and not Path(path).exists():
                problems.append(f"{label}: {path} does not exist")
        if problems:
            raise ConfigurationError("invalid configuration: " + "; ".join(problems))


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config {path} must be a JSON object of flat keys")

    unknown = sorted(set(raw) - set(KEY_MAP))
    if unknown:
        raise ConfigurationError(f"config {path}: unknown keys: {', '.join(unknown)}")
    missing = sorted(k for k in REQUIRED_KEYS if k not in raw)
    if missing:
        raise ConfigurationError(f"config {path}: missing required keys: {', '.join(missing)}")

    base = path.parent
    kwargs: dict = {"base_dir": base}
    for key, value in raw.items():
        field_name, typ, is_path = KEY_MAP[key]
        try:
            coerced = typ(value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"config {path}: key {key}: {exc}") from exc
        if is_path:
            p = Path(coerced)
            kwargs[field_name] = p if p.is_absolute() else base / p
        else:
            kwargs[field_name] = coerced

    config = ServiceConfig(**kwargs)
    config.validate()
    return config


def config_field_names() -> list[str]:
    return [f.name for f in fields(ServiceConfig)]
