# vidscore/scoring.py
from __future__ import annotations

import bisect
import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from string import Template
from typing import Any, Mapping, Optional, Sequence

from .constants import (
    DIMENSIONS,
    SCORE_MAX,
    SCORE_MIN,
    SCORE_VALUES,
    THINK_CLOSE,
    THINK_OPEN,
    Dimension,
    ScoreMode,
)
from .core import clamp, load_asset, round_half_away
from .errors import InputError, MissingScores, OutOfRange
from .schemas import ScoreTriple, TokenScoreDistribution

log = logging.getLogger(__name__)


# -------------------------
# Frame sampling
# -------------------------
def sample_frame_timestamps(duration_s: float, fps: float, max_frames: int) -> list[float]:
    """
    t_k = k/fps while t_k < duration_s, then thinned to max_frames keeping
    the first and last timestamps and spreading the rest evenly.
    """
    if not (duration_s > 0) or not (fps > 0):
        raise InputError(f"duration_s and fps must be positive (got {duration_s}, {fps})")
    if max_frames < 1:
        raise InputError(f"max_frames must be >= 1 (got {max_frames})")

    n = max(1, math.ceil(duration_s * fps))
    while n > 1 and (n - 1) / fps >= duration_s:
        n -= 1
    while n / fps < duration_s:
        n += 1
    stamps = [k / fps for k in range(n)]

    if n <= max_frames:
        return stamps
    if max_frames == 1:
        return [stamps[0]]
    step = (n - 1) / (max_frames - 1)
    return [stamps[round_half_away(i * step)] for i in range(max_frames)]


@dataclass(frozen=True)
class FrameSamplingPlan:
    fps: float = 2.0
    max_frames: int = 32

    def __post_init__(self) -> None:
        if not (self.fps > 0) or self.max_frames < 1:
            raise InputError(f"invalid frame sampling plan: fps={self.fps}, max_frames={self.max_frames}")

    def timestamps(self, duration_s: float) -> list[float]:
        return sample_frame_timestamps(duration_s, self.fps, self.max_frames)


# -------------------------
# Query
# -------------------------
@lru_cache(maxsize=None)
def _template(name: str) -> Template:
    return Template(load_asset(name))


def build_query(prompt_text: str) -> str:
    if not prompt_text or not prompt_text.strip():
        raise InputError("prompt_text must be non-empty")
    # substitute() never re-expands text coming from the prompt itself
    return _template("query_template.txt").substitute(t2v_prompt=prompt_text)


# -------------------------
# Judgment text
# -------------------------
_LABEL_DIMS = {
    "visual": Dimension.VISUAL_QUALITY,
    "text": Dimension.TEXT_ALIGNMENT,
    "alignment": Dimension.TEXT_ALIGNMENT,
    "t2v": Dimension.TEXT_ALIGNMENT,
    "physical": Dimension.PHYSICAL_CONSISTENCY,
    "physics": Dimension.PHYSICAL_CONSISTENCY,
    "phy": Dimension.PHYSICAL_CONSISTENCY,
    "commonsense": Dimension.PHYSICAL_CONSISTENCY,
    "common": Dimension.PHYSICAL_CONSISTENCY,
}

_NUMBER = r"[-+]?\d+(?:\.\d+)?"

_LABELED_RE = re.compile(
    r"(?<![a-z])(?P<label>visual|text|alignment|t2v|physical|physics|phy|commonsense|common)(?![a-z])"
    r"[^\d\n]{0,40}?"
    rf"(?P<value>{_NUMBER})(?:\s*/\s*5(?![\d.]))?",
    re.IGNORECASE,
)

_BARE_RE = re.compile(rf"(?<![\w.])(?P<value>{_NUMBER})(?:\s*/\s*5(?![\d.]))?")


@dataclass(frozen=True)
class ParsedJudgment:
    rationale: str
    scores: ScoreTriple
    # character span of each score value in the raw text
    spans: dict[Dimension, tuple[int, int]]


def split_rationale(raw_text: str) -> tuple[Optional[str], int]:
    """(rationale or None when no think-tag pair, offset where the answer part starts)."""
    start = raw_text.find(THINK_OPEN)
    if start < 0:
        return None, 0
    end = raw_text.find(THINK_CLOSE, start + len(THINK_OPEN))
    if end < 0:
        return None, 0
    return raw_text[start + len(THINK_OPEN):end], end + len(THINK_CLOSE)


def _to_score(dim: Dimension, text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise OutOfRange(f"{dim.value} score {text} is not an integer")
    if not (SCORE_MIN <= value <= SCORE_MAX):
        raise OutOfRange(f"{dim.value} score {text} outside {SCORE_MIN}-{SCORE_MAX}")
    return int(value)


def parse_detailed(raw_text: str) -> ParsedJudgment:
    rationale, offset = split_rationale(raw_text)
    answer = raw_text[offset:]

    found: dict[Dimension, tuple[str, tuple[int, int]]] = {}
    for m in _LABELED_RE.finditer(answer):
        dim = _LABEL_DIMS[m.group("label").lower()]
        if dim not in found:
            found[dim] = (m.group("value"), (offset + m.start("value"), offset + m.end("value")))

    if found and len(found) < len(DIMENSIONS):
        # a partial labelled answer is never topped up with unlabelled numbers
        missing = [d.value for d in DIMENSIONS if d not in found]
        raise MissingScores(f"could not find scores for: {', '.join(missing)}")
    if not found:
        bare = list(_BARE_RE.finditer(answer))
        if len(bare) < len(DIMENSIONS):
            raise MissingScores(f"could not find scores for: {', '.join(d.value for d in DIMENSIONS)}")
        found = {
            dim: (m.group("value"), (offset + m.start("value"), offset + m.end("value")))
            for dim, m in zip(DIMENSIONS, bare)
        }

    values = [_to_score(dim, found[dim][0]) for dim in DIMENSIONS]
    return ParsedJudgment(
        rationale=(rationale or "").strip(),
        scores=ScoreTriple.of(*values),
        spans={dim: found[dim][1] for dim in DIMENSIONS},
    )


def parse_judgment(raw_text: str) -> tuple[str, ScoreTriple]:
    """
    Returns (rationale, scores). The rationale is the content of the first
    think-tag pair ("" when absent); the scores come from the text after it.

    Raises MissingScores when fewer than three values are found and
    OutOfRange when a value is not an integer in 1..5.
    """
    parsed = parse_detailed(raw_text)
    return parsed.rationale, parsed.scores


def render_judgment(rationale: str, scores: ScoreTriple) -> str:
    if THINK_OPEN in rationale or THINK_CLOSE in rationale:
        raise InputError("rationale must not contain think tags")
    if not scores.is_int:
        raise InputError("render_judgment expects integer scores")
    return (
        f"{THINK_OPEN}{rationale}{THINK_CLOSE}\n"
        f"visual quality: {scores.vq}\n"
        f"text-to-video alignment: {scores.ta}\n"
        f"physical/common-sense consistency: {scores.pc}"
    )


# -------------------------
# Soft scores
# -------------------------
def _weights(dist: TokenScoreDistribution | Mapping[int, float]) -> dict[int, float]:
    weights = dict(dist.weights if isinstance(dist, TokenScoreDistribution) else dist)
    if not weights or sum(weights.values()) <= 0:
        raise InputError("token distribution has no positive weight")
    return weights


def soft_score(
    dist: TokenScoreDistribution | Mapping[int, float],
    mode: ScoreMode = ScoreMode.AS_WRITTEN,
) -> float:
    """
    as-written: s* x q(s*) with s* the most probable score (ties -> larger s), clamped to [1, 5].
    expectation: sum over s of s x q(s).
    q is the weight normalized over the five score tokens.
    """
    weights = _weights(dist)
    total = sum(weights.values())
    if ScoreMode(mode) is ScoreMode.EXPECTATION:
        return sum(s * w for s, w in weights.items()) / total
    best = max(weights, key=lambda s: (weights[s], s))
    return clamp(best * (weights[best] / total), float(SCORE_MIN), float(SCORE_MAX))


def soft_triple(
    dists: Mapping[Dimension, TokenScoreDistribution],
    mode: ScoreMode = ScoreMode.AS_WRITTEN,
) -> ScoreTriple:
    missing = [d.value for d in DIMENSIONS if d not in dists]
    if missing:
        raise InputError(f"no token distribution for: {', '.join(missing)}")
    return ScoreTriple.soft(*(soft_score(dists[d], mode) for d in DIMENSIONS))


_SCORE_TOKENS = {str(s): s for s in SCORE_VALUES}


def harvest_token_dists(
    raw_text: str,
    tokens: Sequence[Mapping[str, Any]],
    spans: Mapping[Dimension, tuple[int, int]],
) -> Optional[dict[Dimension, TokenScoreDistribution]]:
    """
    Reads chat-completions logprobs (content[*] with token / logprob / top_logprobs)
    at the token covering each score. Returns None when the tokens do not line up
    with the text or some score position has no alternatives over "1".."5".
    """
    if not tokens:
        return None
    starts: list[int] = []
    pos = 0
    for tok in tokens:
        starts.append(pos)
        pos += len(str(tok.get("token", "")))
    if "".join(str(t.get("token", "")) for t in tokens) != raw_text:
        log.debug("logprob tokens do not reconstruct the response text; skipping soft scores")
        return None

    out: dict[Dimension, TokenScoreDistribution] = {}
    for dim, (start, _end) in spans.items():
        tok = tokens[bisect.bisect_right(starts, start) - 1]
        candidates = tok.get("top_logprobs") or [tok]
        weights: dict[int, float] = {}
        for cand in candidates:
            s = _SCORE_TOKENS.get(str(cand.get("token", "")).strip())
            lp = cand.get("logprob")
            if s is None or lp is None:
                continue
            weights[s] = weights.get(s, 0.0) + math.exp(float(lp))
        if not any(w > 0 for w in weights.values()):
            return None
        out[dim] = TokenScoreDistribution(weights=weights)
    return out

