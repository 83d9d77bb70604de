# vidscore/providers/registry.py
from __future__ import annotations

from typing import Callable, Optional

import httpx

from ..config import EndpointConfig
from .base import JudgeProvider
from .http import ChatCompletionProvider
from .sim import SimJudgeProvider

_PROVIDERS: dict[str, Callable[..., JudgeProvider]] = {
    "http": lambda cfg, transport=None: ChatCompletionProvider(cfg, transport=transport),
    "sim": lambda cfg, transport=None: SimJudgeProvider(),
}


def available_providers() -> list[str]:
    return sorted(_PROVIDERS)


def get_provider(
    cfg: EndpointConfig,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> JudgeProvider:
    factory = _PROVIDERS.get(cfg.provider)
    if not factory:
        raise ValueError(f"Unsupported provider: {cfg.provider}")
    return factory(cfg, transport=transport)
