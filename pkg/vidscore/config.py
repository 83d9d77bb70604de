# vidscore/config.py
from __future__ import annotations

import copy
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, SecretStr, ValidationError

from .constants import (
    DEFAULT_FPS,
    DEFAULT_GROUP_SIZE,
    DEFAULT_TEMPERATURE,
    DEFAULT_TIER_BOUNDS,
    LAMBDA_BY_START_POINT,
    MODELS_PER_PROMPT,
    TIE_MARGIN_FRAC,
    KrippendorffLevel,
    ReportFormat,
    ScoreForm,
    ScoreMode,
    StartPoint,
    Tier,
)
from .errors import ConfigError, InputError

log = logging.getLogger(__name__)

load_dotenv(override=False)


def _env(name: str, default: str) -> str:
    return (os.getenv(name, default) or default).strip()


class Settings(BaseModel):
    # -----------------------------
    # Environment
    # -----------------------------
    env: str = Field(default_factory=lambda: _env("VS2_ENV", "development"))
    log_level: str = Field(default_factory=lambda: _env("VS2_LOG_LEVEL", "INFO").upper())

    # -----------------------------
    # Judge endpoint
    # -----------------------------
    api_key: str = Field(default_factory=lambda: _env("VS2_API_KEY", ""))
    base_url: str = Field(
        default_factory=lambda: _env("VS2_BASE_URL", "http://127.0.0.1:8000/v1")
    )
    model_name: str = Field(default_factory=lambda: _env("VS2_MODEL", "video-judge"))


settings = Settings()


class EndpointConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    provider: str = "http"
    base_url: str = "http://127.0.0.1:8000/v1"
    api_key: SecretStr = SecretStr("")
    model_name: str = "video-judge"
    temperature: float = Field(DEFAULT_TEMPERATURE, ge=0)
    max_tokens: int = Field(1024, ge=1)
    max_concurrent: int = Field(4, ge=1)
    # retries after the first attempt
    retry_limit: int = Field(3, ge=0, le=10)
    backoff_s: float = Field(0.5, ge=0)
    backoff_max_s: float = Field(8.0, ge=0)
    timeout_s: float = Field(120.0, gt=0)
    request_logprobs: bool = True
    top_logprobs: int = Field(5, ge=1, le=20)
    # 0 = no throttle
    requests_per_minute: int = Field(0, ge=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = 0
    jobs: int = Field(4, ge=1)
    format: ReportFormat = ReportFormat.TABLE

    # inference
    fps: float = Field(DEFAULT_FPS, gt=0)
    max_frames: int = Field(32, ge=1)
    frame_source: str = Field("uri", pattern="^(uri|dir|ffmpeg)$")
    frame_dir: Optional[str] = None
    score_mode: ScoreMode = ScoreMode.AS_WRITTEN
    score_form: ScoreForm = ScoreForm.FLOAT

    # reward
    lambda_: Optional[float] = Field(None, alias="lambda", ge=0)
    start_point: StartPoint = StartPoint.SFT
    group_size: int = Field(DEFAULT_GROUP_SIZE, ge=2)

    # evaluation
    margin_frac: float = Field(TIE_MARGIN_FRAC, ge=0, lt=1)
    coverage_threshold: float = Field(1.0, ge=0, le=1)
    krippendorff_level: KrippendorffLevel = KrippendorffLevel.INTERVAL

    # curation
    tier_bounds: dict[Tier, tuple[int, int]] = Field(
        default_factory=lambda: dict(DEFAULT_TIER_BOUNDS)
    )
    models_per_prompt: int = Field(MODELS_PER_PROMPT, ge=1)

    endpoint: EndpointConfig = Field(default_factory=EndpointConfig)
    paths: dict[str, str] = Field(default_factory=dict)

    @property
    def effective_lambda(self) -> float:
        if self.lambda_ is not None:
            return self.lambda_
        return LAMBDA_BY_START_POINT[self.start_point]

    @property
    def use_soft_scores(self) -> bool:
        return self.score_form is ScoreForm.FLOAT

    def snapshot(self) -> dict[str, Any]:
        """Config as written into report provenance; never carries the API key."""
        data = self.model_dump(mode="json", by_alias=True, exclude={"endpoint": {"api_key"}})
        data["lambda"] = self.effective_lambda
        return data


# -------------------------
# Presets (ablation axes)
# -------------------------
PRESETS: dict[str, dict[str, Any]] = {
    "fps2": {"fps": 2.0},
    "fps4": {"fps": 4.0},
    "fps8": {"fps": 8.0},
    "lambda0": {"lambda": 0.0},
    "lambda0.3": {"lambda": 0.3},
    "expectation": {"score_mode": ScoreMode.EXPECTATION.value},
    "as-written": {"score_mode": ScoreMode.AS_WRITTEN.value},
    "int-scores": {"score_form": ScoreForm.INT.value},
    "float-scores": {"score_form": ScoreForm.FLOAT.value},
}


def _merge(base: dict[str, Any], layer: Mapping[str, Any]) -> dict[str, Any]:
    for key, value in layer.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def _read_yaml(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_run_config(
    path: str | Path | None = None,
    presets: Sequence[str] = (),
    overrides: Mapping[str, Any] | None = None,
    env: Settings | None = None,
) -> RunConfig:
    """defaults < presets < config file < overrides (command-line flags)."""
    env = env or Settings()
    data: dict[str, Any] = {
        "endpoint": {
            "base_url": env.base_url,
            "api_key": env.api_key,
            "model_name": env.model_name,
        }
    }
    for name in presets:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
        _merge(data, PRESETS[name])
    if path is not None:
        _merge(data, _read_yaml(path))
    if overrides:
        _merge(data, overrides)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def assert_runtime_config(cfg: RunConfig, env: Settings | None = None) -> None:
    """
    Refuses to start a judge run in production with unsafe endpoint settings.
    Call before any request goes out.
    """
    env = env or settings
    if env.env == "production":
        if cfg.endpoint.provider == "http" and not cfg.endpoint.api_key.get_secret_value():
            raise ConfigError("PROD CONFIG ERROR: VS2_API_KEY must be set")
        if cfg.endpoint.temperature > 2.0:
            raise ConfigError("PROD CONFIG ERROR: temperature must be within [0, 2]")


def validate_inputs(paths: Iterable[str | Path | None]) -> None:
    missing = [str(p) for p in paths if p is not None and not Path(p).exists()]
    if missing:
        raise InputError(f"input file(s) not found: {', '.join(missing)}")
