# vidscore/providers/sim.py
from __future__ import annotations

import math
import re
from typing import Any, Dict, Optional

from ..constants import SCORE_MAX, SCORE_MIN
from ..core import payload_digest
from ..schemas import ScoreTriple
from ..scoring import render_judgment
from .base import JudgeProvider

_TOKEN_RE = re.compile(r"\d|[^\d\s]+|\s+")


def score_token_weights(digit: int, peak: float = 0.7) -> dict[int, float]:
    """Most mass on the written score, the remainder split over its in-range neighbours."""
    neighbours = [s for s in (digit - 1, digit + 1) if SCORE_MIN <= s <= SCORE_MAX]
    weights = {digit: peak}
    for s in neighbours:
        weights[s] = (1.0 - peak) / len(neighbours)
    return weights


def tokenize_with_logprobs(text: str, top_logprobs: int = 5, peak: float = 0.7) -> list[dict[str, Any]]:
    """Chat-completions style logprobs.content; every digit is its own token."""
    out: list[dict[str, Any]] = []
    for tok in _TOKEN_RE.findall(text):
        if tok.isdigit() and SCORE_MIN <= int(tok) <= SCORE_MAX:
            weights = score_token_weights(int(tok), peak)
            alts = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:top_logprobs]
            out.append({
                "token": tok,
                "logprob": math.log(weights[int(tok)]),
                "top_logprobs": [{"token": str(s), "logprob": math.log(w)} for s, w in alts],
            })
        else:
            out.append({"token": tok, "logprob": 0.0, "top_logprobs": [{"token": tok, "logprob": 0.0}]})
    return out


def chat_completion_response(
    text: str,
    model: str,
    logprobs: bool = False,
    top_logprobs: int = 5,
    peak: float = 0.7,
) -> Dict[str, Any]:
    choice: Dict[str, Any] = {
        "index": 0,
        "message": {"role": "assistant", "content": text},
        "finish_reason": "stop",
        "logprobs": None,
    }
    if logprobs:
        choice["logprobs"] = {"content": tokenize_with_logprobs(text, top_logprobs, peak)}
    return {
        "id": f"chatcmpl-{payload_digest({'model': model, 'text': text})[:16]}",
        "object": "chat.completion",
        "model": model,
        "choices": [choice],
    }


def _message_text(payload: Dict[str, Any]) -> str:
    messages = payload.get("messages") or []
    if not messages:
        return ""
    content = messages[-1].get("content")
    if isinstance(content, str):
        return content
    return "".join(p.get("text", "") for p in content or [] if p.get("type") == "text")


def sim_scores(payload: Dict[str, Any]) -> ScoreTriple:
    digest = payload_digest({"model": payload.get("model"), "messages": payload.get("messages")})
    return ScoreTriple.of(*(int(digest[i:i + 2], 16) % 5 + 1 for i in (0, 2, 4)))


class SimJudgeProvider(JudgeProvider):
    """Deterministic in-process judge: same request => same answer. For dry runs."""

    name = "sim"

    def __init__(self, peak: float = 0.7) -> None:
        self.peak = peak

    async def run(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        scores = sim_scores(payload)
        words = len(_message_text(payload).split())
        text = render_judgment(f"Simulated assessment of a {words}-word query.", scores)
        top: Optional[int] = payload.get("top_logprobs")
        return chat_completion_response(
            text,
            model=str(payload.get("model", "sim")),
            logprobs=bool(payload.get("logprobs")),
            top_logprobs=int(top or 5),
            peak=self.peak,
        )
