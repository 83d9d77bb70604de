# vidscore/providers/http.py
from __future__ import annotations

from typing import Any, Dict, Optional

import httpx

from ..config import EndpointConfig
from ..errors import EndpointError, TransientEndpointError
from .base import JudgeProvider


class ChatCompletionProvider(JudgeProvider):
    """Chat-completions JSON over HTTP (OpenAI-compatible servers, vLLM, the mock endpoint)."""

    name = "http"

    def __init__(
        self,
        cfg: EndpointConfig,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ) -> None:
        headers = {"Content-Type": "application/json"}
        key = cfg.api_key.get_secret_value()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.AsyncClient(
            base_url=cfg.base_url,
            headers=headers,
            timeout=cfg.timeout_s,
            transport=transport,
        )

    async def run(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        try:
            resp = await self._client.post("/chat/completions", json=payload)
        except httpx.TransportError as e:
            raise TransientEndpointError(f"{type(e).__name__}: {e}") from e

        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientEndpointError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as e:
            raise EndpointError("endpoint returned a non-JSON body") from e

    async def aclose(self) -> None:
        await self._client.aclose()
