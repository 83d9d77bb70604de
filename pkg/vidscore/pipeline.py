# vidscore/pipeline.py
from __future__ import annotations

import asyncio
import itertools
import json
import logging
import random
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Any, Awaitable, Callable, Iterable, Mapping, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import EndpointConfig
from .constants import (
    DEFAULT_TIER_BOUNDS,
    DIMENSIONS,
    KOALA_MAX_SEGMENT_S,
    KOALA_MIN_AESTHETIC,
    KOALA_MIN_CLARITY,
    MODELS_PER_PROMPT,
    NSFW_MAX_PROB,
    RECONCILE_MAX_ATTEMPTS,
    SCORE_MAX,
    SCORE_MIN,
    SEMANTIC_REJECT_REASONS,
    TRIGGER_WORDS,
    VIDPROM_MAX_WORDS,
    VIDPROM_MIN_WORDS,
    CameraMotion,
    PromptSource,
    ReconcileStatus,
    RejectReason,
    Tier,
    Verdict,
)
from .core import load_asset, round_half_away
from .errors import (
    CurationError,
    EndpointError,
    InputError,
    MissingScores,
    OutOfRange,
    ParseError,
    RevisionNotPermitted,
    SupplierError,
)
from .judge import JudgeClient
from .schemas import DimensionComments, Record, ScoreTriple

log = logging.getLogger(__name__)


# -------------------------
# Prompt curation
# -------------------------
class PromptCandidate(Record):
    prompt_id: Optional[str] = None
    text: str
    source: PromptSource
    nsfw_prob: Optional[float] = Field(None, ge=0, le=1)
    segment_duration_s: Optional[float] = Field(None, ge=0)
    clarity: Optional[float] = Field(None, ge=0, le=1)
    aesthetic: Optional[float] = None


class PromptVerdict(Record):
    prompt_id: Optional[str] = None
    source: PromptSource
    text: str
    verdict: Verdict
    reason: Optional[RejectReason] = None
    # rule | semantic
    stage: str = "rule"
    revised_text: Optional[str] = None
    error: Optional[str] = None

    @property
    def kept(self) -> bool:
        return self.verdict in (Verdict.KEEP, Verdict.REVISE)

    @property
    def final_text(self) -> str:
        return self.revised_text if self.verdict is Verdict.REVISE and self.revised_text else self.text


_REQUIRED_FIELDS: dict[PromptSource, tuple[str, ...]] = {
    PromptSource.VIDPROM: ("nsfw_prob",),
    PromptSource.KOALA: ("segment_duration_s", "clarity", "aesthetic"),
}


def _require(p: PromptCandidate) -> None:
    missing = [f for f in _REQUIRED_FIELDS.get(p.source, ()) if getattr(p, f) is None]
    if missing:
        who = p.prompt_id or p.text[:40]
        raise CurationError(f"{p.source.value} prompt {who!r} lacks required field(s): {', '.join(missing)}")


def _rule_reason(p: PromptCandidate) -> Optional[RejectReason]:
    # first matching rule wins: nsfw, trigger words, length | duration, clarity, aesthetic
    if p.source is PromptSource.VIDPROM:
        if p.nsfw_prob > NSFW_MAX_PROB:  # type: ignore[operator]
            return RejectReason.NSFW
        lowered = p.text.lower()
        if any(word in lowered for word in TRIGGER_WORDS):
            return RejectReason.TRIGGER_WORD
        if not VIDPROM_MIN_WORDS <= len(p.text.split()) <= VIDPROM_MAX_WORDS:
            return RejectReason.LENGTH
    elif p.source is PromptSource.KOALA:
        if p.segment_duration_s >= KOALA_MAX_SEGMENT_S:  # type: ignore[operator]
            return RejectReason.DURATION
        if p.clarity < KOALA_MIN_CLARITY:  # type: ignore[operator]
            return RejectReason.CLARITY
        if p.aesthetic < KOALA_MIN_AESTHETIC:  # type: ignore[operator]
            return RejectReason.AESTHETIC
    return None


def filter_prompt(p: PromptCandidate) -> PromptVerdict:
    """Rule-based stage. Pure: same candidate, same verdict."""
    _require(p)
    reason = _rule_reason(p)
    return PromptVerdict(
        prompt_id=p.prompt_id,
        source=p.source,
        text=p.text,
        verdict=Verdict.REJECT if reason else Verdict.KEEP,
        reason=reason,
    )


class TextJudge(ABC):
    """A text-in, text-out language model used by the curation stages."""

    @abstractmethod
    async def complete(self, query: str) -> str:
        raise NotImplementedError

    async def aclose(self) -> None:
        return None


class ChatTextJudge(TextJudge):
    def __init__(self, cfg: EndpointConfig, **client_kwargs: Any) -> None:
        self.client = JudgeClient(cfg, **client_kwargs)

    async def complete(self, query: str) -> str:
        return await self.client.complete_text(query, label="curation")

    async def aclose(self) -> None:
        await self.client.aclose()


_KOALA_REVISION_RULE = (
    'If a light edit would fix the prompt, answer "revise" and give the revised prompt.'
)
_NO_REVISION_RULE = 'Revision is not allowed for this source: answer "keep" or "reject" only.'


def build_semantic_query(p: PromptCandidate) -> str:
    rule = _KOALA_REVISION_RULE if p.source is PromptSource.KOALA else _NO_REVISION_RULE
    return Template(load_asset("semantic_filter_template.txt")).substitute(
        revision_rule=rule, source=p.source.value, prompt=p.text
    )


_TRAILING_COMMA_RE = re.compile(r",\s*([}\]])")


def _json_block(text: str) -> dict[str, Any]:
    """The outermost {...} of a reply; trailing commas are tolerated."""
    start, end = text.find("{"), text.rfind("}")
    if start < 0 or end <= start:
        raise ParseError("reply has no JSON object")
    body = _TRAILING_COMMA_RE.sub(r"\1", text[start:end + 1])
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as e:
        raise ParseError(f"reply is not valid JSON: {e.msg}") from e
    if not isinstance(obj, dict):
        raise ParseError("reply is not a JSON object")
    return obj


def parse_semantic_reply(text: str) -> tuple[Verdict, Optional[RejectReason], Optional[str]]:
    obj = _json_block(text)
    try:
        verdict = Verdict(str(obj.get("verdict", "")).strip().lower())
    except ValueError as e:
        raise ParseError(f"unknown verdict {obj.get('verdict')!r}") from e
    if verdict is Verdict.UNFILTERED:
        raise ParseError("verdict must be keep, revise or reject")
    reason: Optional[RejectReason] = None
    if verdict is Verdict.REJECT:
        try:
            reason = RejectReason(str(obj.get("reason", "")).strip())
        except ValueError as e:
            raise ParseError(f"unknown reject reason {obj.get('reason')!r}") from e
        if reason not in SEMANTIC_REJECT_REASONS:
            raise ParseError(f"{reason.value} is not a semantic reject reason")
    revised = obj.get("revised_prompt")
    if verdict is Verdict.REVISE and not (isinstance(revised, str) and revised.strip()):
        raise ParseError("revise verdict without a revised_prompt")
    return verdict, reason, revised.strip() if verdict is Verdict.REVISE else None


async def semantic_filter(p: PromptCandidate, llm: TextJudge, retries: int = 2) -> PromptVerdict:
    """
    LLM stage. Keep, revise (koala only) or reject with a semantic reason code.
    A judge that keeps failing yields an UNFILTERED verdict rather than a keep.
    """
    query = build_semantic_query(p)
    last_error = ""
    for attempt in range(1, retries + 2):
        try:
            verdict, reason, revised = parse_semantic_reply(await llm.complete(query))
        except (EndpointError, ParseError) as e:
            last_error = f"{type(e).__name__}: {e}"
            log.warning("semantic filter %s: attempt %d failed: %s", p.prompt_id, attempt, last_error)
            continue
        if verdict is Verdict.REVISE and p.source is not PromptSource.KOALA:
            raise RevisionNotPermitted(f"revision not permitted for source {p.source.value}")
        return PromptVerdict(
            prompt_id=p.prompt_id,
            source=p.source,
            text=p.text,
            verdict=verdict,
            reason=reason,
            stage="semantic",
            revised_text=revised,
        )
    return PromptVerdict(
        prompt_id=p.prompt_id,
        source=p.source,
        text=p.text,
        verdict=Verdict.UNFILTERED,
        stage="semantic",
        error=last_error,
    )


async def semantic_filter_batch(
    candidates: Sequence[PromptCandidate], llm: TextJudge, jobs: int = 4, retries: int = 2
) -> list[PromptVerdict]:
    """Input order; a revise verdict for a source that may not be revised becomes a per-prompt reject."""
    sem = asyncio.Semaphore(max(1, jobs))

    async def one(p: PromptCandidate) -> PromptVerdict:
        async with sem:
            try:
                return await semantic_filter(p, llm, retries=retries)
            except RevisionNotPermitted as e:
                log.warning("semantic filter %s: %s", p.prompt_id, e)
                return PromptVerdict(
                    prompt_id=p.prompt_id,
                    source=p.source,
                    text=p.text,
                    verdict=Verdict.REJECT,
                    reason=RejectReason.REVISION_NOT_PERMITTED,
                    stage="semantic",
                    error=str(e),
                )

    return list(await asyncio.gather(*(one(p) for p in candidates)))


# -------------------------
# Camera-motion augmentation
# -------------------------
_MOTION_SUFFIX_RE = re.compile(
    r"(?:^|\s)(?:" + "|".join(re.escape(m.value) for m in CameraMotion) + r")$", re.IGNORECASE
)


def augment_camera_motion(
    text: str, motion: CameraMotion | str | None = None, seed: int | str | None = None
) -> str:
    """'A dog runs' + Pan left -> 'A dog runs. Pan left.'; text already ending in a motion is unchanged."""
    normalized = " ".join(text.split())
    if _MOTION_SUFFIX_RE.search(normalized.rstrip(". ")):
        return normalized
    chosen = CameraMotion(motion) if motion is not None else random.Random(seed).choice(list(CameraMotion))
    return f"{normalized.rstrip('. ')}. {chosen.value}."


# -------------------------
# Tier-balanced model sampling
# -------------------------
@dataclass(frozen=True)
class TierQuota:
    bounds: Mapping[Tier, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_TIER_BOUNDS))
    total: int = MODELS_PER_PROMPT

    def __post_init__(self) -> None:
        for tier in Tier:
            lo, hi = self.bounds.get(tier, (0, 0))
            if lo < 0 or hi < lo:
                raise CurationError(f"invalid bounds for tier {tier.value}: ({lo}, {hi})")

    def feasible_counts(self, sizes: Mapping[Tier, int]) -> list[tuple[int, ...]]:
        """Every per-tier count vector (in Tier order) within bounds and roster sizes that sums to total."""
        ranges = []
        for tier in Tier:
            lo, hi = self.bounds.get(tier, (0, 0))
            ranges.append(range(lo, min(hi, sizes.get(tier, 0)) + 1))
        return [c for c in itertools.product(*ranges) if sum(c) == self.total]

    def admits(self, counts: Mapping[Tier, int]) -> bool:
        if sum(counts.values()) != self.total:
            return False
        return all(self.bounds[t][0] <= counts.get(t, 0) <= self.bounds[t][1] for t in Tier)


def load_roster(path: str | Path | None = None) -> dict[Tier, list[str]]:
    text = load_asset("roster.yaml") if path is None else Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    try:
        return {Tier(k): [str(m) for m in (v or [])] for k, v in data.items()}
    except (ValueError, AttributeError) as e:
        raise CurationError(f"invalid roster: {e}") from e


def sample_models_for_prompt(
    roster: Mapping[Tier, Sequence[str]],
    seed: int | str,
    quota: TierQuota | None = None,
) -> list[str]:
    quota = quota or TierQuota()
    empty = [t.value for t in Tier if not roster.get(t)]
    if empty:
        raise CurationError(f"roster tier(s) empty: {', '.join(empty)}")
    every = [m for t in Tier for m in roster[t]]
    if len(set(every)) != len(every):
        raise CurationError("roster lists a model id more than once")
    if len(every) < quota.total:
        raise CurationError(f"roster has {len(every)} models; {quota.total} needed")

    options = quota.feasible_counts({t: len(roster[t]) for t in Tier})
    if not options:
        raise CurationError("no per-tier counts satisfy the quota for this roster")

    rng = random.Random(seed)
    counts = rng.choice(options)
    picked: list[str] = []
    for tier, k in zip(Tier, counts):
        picked.extend(rng.sample(list(roster[tier]), k))
    return picked


def tier_histogram(models: Iterable[str], roster: Mapping[Tier, Sequence[str]]) -> dict[Tier, int]:
    tier_of = {m: t for t, ms in roster.items() for m in ms}
    hist = {t: 0 for t in Tier}
    for m in models:
        hist[tier_of[m]] += 1
    return hist


# -------------------------
# Human/model score reconciliation
# -------------------------
class ReconcileOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: ReconcileStatus
    final: Optional[ScoreTriple] = None
    attempts: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "ReconcileOutcome":
        settled = self.status in (ReconcileStatus.ACCEPTED, ReconcileStatus.AVERAGED)
        if settled and self.final is None:
            raise ValueError(f"{self.status.value} outcome needs a final triple")
        if not settled and self.final is not None:
            raise ValueError(f"{self.status.value} outcome carries no final triple")
        return self


def _require_int(name: str, t: ScoreTriple) -> None:
    if not t.is_int:
        raise InputError(f"{name} scores must be integers")


def reconcile_scores(human: ScoreTriple, model: ScoreTriple) -> ReconcileOutcome:
    """
    Per dimension: |h-m| <= 1 keeps h, |h-m| == 2 averages.
    Any dimension at 3 or more sends the whole entry back for rescoring.
    """
    _require_int("human", human)
    _require_int("model", model)
    diffs = [abs(h - m) for h, m in zip(human, model)]
    if max(diffs) >= 3:
        return ReconcileOutcome(status=ReconcileStatus.RESCORE_NEEDED)
    final = [h if d <= 1 else round_half_away((h + m) / 2) for h, m, d in zip(human, model, diffs)]
    status = ReconcileStatus.AVERAGED if 2 in diffs else ReconcileStatus.ACCEPTED
    return ReconcileOutcome(status=status, final=ScoreTriple.of(*final))


Supplier = Callable[[int], ScoreTriple]
AsyncSupplier = Callable[[int], Awaitable[ScoreTriple]]


def _attempt(human: ScoreTriple, model: ScoreTriple, attempt: int) -> Optional[ReconcileOutcome]:
    outcome = reconcile_scores(human, model)
    if outcome.status is ReconcileStatus.RESCORE_NEEDED:
        return None
    return outcome.model_copy(update={"attempts": attempt})


def _discarded(max_attempts: int) -> ReconcileOutcome:
    return ReconcileOutcome(status=ReconcileStatus.DISCARDED, attempts=max_attempts)


def reconcile_entry(
    human: ScoreTriple, supplier: Supplier, max_attempts: int = RECONCILE_MAX_ATTEMPTS
) -> ReconcileOutcome:
    """supplier(attempt) returns a fresh model triple; attempt counts from 1."""
    for attempt in range(1, max_attempts + 1):
        try:
            model = supplier(attempt)
        except SupplierError:
            raise
        except Exception as e:
            raise SupplierError(f"rescoring source failed: {e}", attempt) from e
        outcome = _attempt(human, model, attempt)
        if outcome is not None:
            return outcome
    return _discarded(max_attempts)


async def areconcile_entry(
    human: ScoreTriple, supplier: AsyncSupplier, max_attempts: int = RECONCILE_MAX_ATTEMPTS
) -> ReconcileOutcome:
    for attempt in range(1, max_attempts + 1):
        try:
            model = await supplier(attempt)
        except SupplierError:
            raise
        except Exception as e:
            raise SupplierError(f"rescoring source failed: {e}", attempt) from e
        outcome = _attempt(human, model, attempt)
        if outcome is not None:
            return outcome
    return _discarded(max_attempts)


def difference_histogram(pairs: Iterable[tuple[ScoreTriple, ScoreTriple]]) -> dict[str, int]:
    """Per-score |human - model| counts plus entries with any dimension at 3 or more."""
    hist = {"0": 0, "1": 0, "2": 0, ">=3": 0, "bad_entries": 0, "n_entries": 0, "n_scores": 0}
    for human, model in pairs:
        hist["n_entries"] += 1
        bad = False
        for h, m in zip(human, model):
            d = abs(int(h) - int(m))
            hist["n_scores"] += 1
            if d >= 3:
                hist[">=3"] += 1
                bad = True
            else:
                hist[str(d)] += 1
        hist["bad_entries"] += bad
    return hist


# -------------------------
# Rationale elicitation and alignment
# -------------------------
def _comment(text: Optional[str]) -> str:
    return text.strip() if text and text.strip() else "null"


def build_rationale_query(prompt_text: str, comments: DimensionComments | None = None) -> str:
    comments = comments or DimensionComments()
    return Template(load_asset("rationale_template.txt")).substitute(
        prompt=prompt_text,
        comment_visual=_comment(comments.vq),
        comment_t2v=_comment(comments.ta),
        comment_phy=_comment(comments.pc),
    )


_RATIONALE_KEYS = ("score_visual", "score_t2v", "score_phy")


def parse_rationale_reply(text: str) -> ScoreTriple:
    obj = _json_block(text)
    missing = [k for k in _RATIONALE_KEYS if obj.get(k) in (None, "")]
    if missing:
        raise MissingScores(f"rationale reply lacks {', '.join(missing)}")
    values = []
    for key, dim in zip(_RATIONALE_KEYS, DIMENSIONS):
        try:
            x = float(str(obj[key]).strip())
        except ValueError as e:
            raise OutOfRange(f"{key}={obj[key]!r} is not a number") from e
        if not x.is_integer() or not SCORE_MIN <= x <= SCORE_MAX:
            raise OutOfRange(f"{key}={obj[key]!r} is not an integer in {SCORE_MIN}-{SCORE_MAX}")
        values.append(int(x))
    return ScoreTriple.of(*values)


def build_alignment_query(thinking: str, gt: ScoreTriple) -> str:
    return Template(load_asset("alignment_template.txt")).substitute(
        thinking=thinking, v_score=gt.vq, t_score=gt.ta, p_score=gt.pc
    )


def parse_alignment_reply(text: str) -> str:
    new_thinking = _json_block(text).get("new_thinking")
    if not isinstance(new_thinking, str) or not new_thinking.strip():
        raise ParseError("alignment reply lacks a non-empty new_thinking string")
    return new_thinking.strip()


class RationaleSupplier:
    """A TextJudge as the rescoring source of areconcile_entry."""

    def __init__(self, judge: TextJudge, prompt_text: str, comments: DimensionComments | None = None) -> None:
        self.judge = judge
        self.query = build_rationale_query(prompt_text, comments)

    async def __call__(self, attempt: int) -> ScoreTriple:
        try:
            return parse_rationale_reply(await self.judge.complete(self.query))
        except (EndpointError, ParseError) as e:
            raise SupplierError(f"rationale request failed: {e}", attempt) from e
