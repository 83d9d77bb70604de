# vidscore/judge.py
from __future__ import annotations

import asyncio
import logging
from typing import Any, Awaitable, Callable, Iterable, Optional

import httpx

from .config import EndpointConfig
from .constants import ScoreMode
from .errors import EndpointError, ParseError, TransientEndpointError
from .frames import FrameExtractor, UriFrameExtractor
from .limits import ConcurrencyGate, SlidingWindowLimiter
from .providers import JudgeProvider, get_provider
from .schemas import Judgment, VideoEntry
from .scoring import (
    FrameSamplingPlan,
    build_query,
    harvest_token_dists,
    parse_detailed,
    soft_triple,
)

log = logging.getLogger(__name__)

Sleep = Callable[[float], Awaitable[Any]]


def build_payload(cfg: EndpointConfig, query: str, frame_urls: list[str]) -> dict[str, Any]:
    """Frames first, then the query text."""
    content: list[dict[str, Any]] = [
        {"type": "image_url", "image_url": {"url": url}} for url in frame_urls
    ]
    content.append({"type": "text", "text": query})
    payload: dict[str, Any] = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": [{"role": "user", "content": content}],
    }
    if cfg.request_logprobs:
        payload["logprobs"] = True
        payload["top_logprobs"] = cfg.top_logprobs
    return payload


def _response_text(response: dict[str, Any]) -> tuple[str, list[dict[str, Any]]]:
    try:
        choice = response["choices"][0]
        text = choice["message"]["content"]
    except (KeyError, IndexError, TypeError) as e:
        raise EndpointError("malformed chat-completion response") from e
    if not isinstance(text, str):
        raise EndpointError("chat-completion response has no text content")
    tokens = ((choice.get("logprobs") or {}).get("content")) or []
    return text, tokens


class JudgeClient:
    """
    Scores videos against one judge endpoint.
    Concurrency is bounded by cfg.max_concurrent across every call made through the client.
    """

    def __init__(
        self,
        cfg: EndpointConfig,
        provider: Optional[JudgeProvider] = None,
        extractor: Optional[FrameExtractor] = None,
        score_mode: ScoreMode = ScoreMode.AS_WRITTEN,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        sleep: Sleep = asyncio.sleep,
    ) -> None:
        self.cfg = cfg
        self.provider = provider or get_provider(cfg, transport=transport)
        self.extractor = extractor or UriFrameExtractor()
        self.score_mode = ScoreMode(score_mode)
        self.gate = ConcurrencyGate(cfg.max_concurrent)
        self.limiter = SlidingWindowLimiter(per_minute=cfg.requests_per_minute)
        self._sleep = sleep

    async def __aenter__(self) -> "JudgeClient":
        return self

    async def __aexit__(self, *exc: object) -> None:
        await self.aclose()

    async def aclose(self) -> None:
        await self.provider.aclose()

    def _backoff(self, attempt: int) -> float:
        return min(self.cfg.backoff_s * (2 ** (attempt - 1)), self.cfg.backoff_max_s)

    async def _request(self, video_id: str, payload: dict[str, Any]) -> tuple[dict[str, Any], int]:
        max_attempts = self.cfg.retry_limit + 1
        attempt = 0
        while True:
            attempt += 1
            try:
                async with self.gate:
                    await self.limiter.acquire()
                    log.debug("judge %s: attempt %d/%d", video_id, attempt, max_attempts)
                    return await self.provider.run(payload), attempt
            except TransientEndpointError as e:
                log.warning("judge %s: attempt %d/%d failed: %s", video_id, attempt, max_attempts, e)
                if attempt >= max_attempts:
                    raise EndpointError(
                        f"{video_id}: retries exhausted after {attempt} attempts ({e})",
                        attempts=attempt,
                    ) from e
                await self._sleep(self._backoff(attempt))
            except EndpointError as e:
                e.attempts = attempt
                raise

    async def complete_text(self, query: str, label: str = "text") -> str:
        """Text-only completion through the same gate and retry policy; no logprobs."""
        payload = build_payload(self.cfg.model_copy(update={"request_logprobs": False}), query, [])
        response, _ = await self._request(label, payload)
        text, _ = _response_text(response)
        return text

    async def judge_video(self, entry: VideoEntry, plan: FrameSamplingPlan) -> Judgment:
        timestamps = plan.timestamps(entry.duration_s)
        frame_urls = await asyncio.to_thread(self.extractor.frame_urls, entry, timestamps)
        payload = build_payload(self.cfg, build_query(entry.prompt_text), frame_urls)

        response, attempts = await self._request(entry.video_id, payload)
        text, tokens = _response_text(response)

        try:
            parsed = parse_detailed(text)
        except ParseError as e:
            log.warning("judge %s: unparseable response: %s", entry.video_id, e)
            return Judgment(
                video_id=entry.video_id,
                raw_text=text,
                parse_failed=True,
                error=f"{type(e).__name__}: {e}",
                attempts=attempts,
            )

        token_dists = None
        soft = None
        if self.cfg.request_logprobs and tokens:
            token_dists = harvest_token_dists(text, tokens, parsed.spans)
            if token_dists is not None:
                soft = soft_triple(token_dists, self.score_mode)
        if attempts > 1:
            log.info("judge %s: succeeded after %d attempts", entry.video_id, attempts)
        return Judgment(
            video_id=entry.video_id,
            raw_text=text,
            rationale=parsed.rationale,
            scores=parsed.scores,
            token_dists=token_dists,
            soft_scores=soft,
            attempts=attempts,
        )

    async def judge_batch(
        self,
        entries: Iterable[VideoEntry],
        plan: FrameSamplingPlan,
        on_result: Optional[Callable[[Judgment], None]] = None,
    ) -> dict[str, Judgment]:
        """
        Judges every entry concurrently; results are keyed by video_id.
        An exhausted endpoint cancels outstanding work and re-raises; results
        finished before that point have already gone through on_result.
        """
        results: dict[str, Judgment] = {}

        async def one(entry: VideoEntry) -> None:
            judgment = await self.judge_video(entry, plan)
            results[entry.video_id] = judgment
            if on_result is not None:
                on_result(judgment)

        tasks = [asyncio.create_task(one(e)) for e in entries]
        try:
            for fut in asyncio.as_completed(tasks):
                await fut
        except BaseException:
            for t in tasks:
                t.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)
            raise
        return results


async def judge_video(
    cfg: EndpointConfig,
    entry: VideoEntry,
    plan: FrameSamplingPlan,
    **client_kwargs: Any,
) -> Judgment:
    """One-shot convenience wrapper around JudgeClient."""
    async with JudgeClient(cfg, **client_kwargs) as client:
        return await client.judge_video(entry, plan)
