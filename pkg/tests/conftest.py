from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import pytest

from vidscore.config import EndpointConfig
from vidscore.schemas import VideoEntry


def write_jsonl(path: Path, rows: Iterable[Any]) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(row if isinstance(row, str) else json.dumps(row))
            f.write("\n")
    return path


def read_jsonl(path: Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def make_entry(i: int, prompt: str = "A red fox runs across a snowy field") -> VideoEntry:
    return VideoEntry(
        video_id=f"v{i:03d}",
        prompt_id=f"p{i:03d}",
        prompt_text=prompt,
        model_id="kling-1.6",
        tier="Perfect",
        media_uri=f"file:///videos/v{i:03d}.mp4",
        fps=24.0,
        duration_s=2.0,
        width=640,
        height=360,
    )


@pytest.fixture
def entries() -> list[VideoEntry]:
    return [make_entry(i) for i in range(10)]


@pytest.fixture
def endpoint_cfg() -> EndpointConfig:
    return EndpointConfig(
        base_url="http://mock/v1",
        api_key="test-key",
        model_name="video-judge",
        max_concurrent=2,
        retry_limit=3,
        backoff_s=0.0,
        backoff_max_s=0.0,
    )


@pytest.fixture(autouse=True)
def _no_env_leak(monkeypatch: pytest.MonkeyPatch) -> None:
    for name in ("VS2_ENV", "VS2_API_KEY", "VS2_BASE_URL", "VS2_LOG_LEVEL", "VS2_MODEL"):
        monkeypatch.delenv(name, raising=False)
