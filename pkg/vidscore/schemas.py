# vidscore/schemas.py
from __future__ import annotations

import math
from typing import Any, Iterator, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import (
    DIMENSIONS,
    SCORE_MAX,
    SCORE_MIN,
    Dimension,
    DimensionScope,
    PreferenceLabel,
    ScoreForm,
    Tier,
)


class Record(BaseModel):
    """Immutable JSONL record; unknown input fields are kept and echoed on output."""

    model_config = ConfigDict(frozen=True, extra="allow", populate_by_name=True)

    def to_json(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True, by_alias=True)

    @property
    def extras(self) -> dict[str, Any]:
        return dict(self.__pydantic_extra__ or {})


# -------------------------
# Score triples
# -------------------------
def _is_integral(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, int):
        return True
    return isinstance(v, float) and math.isfinite(v) and v.is_integer()


class ScoreTriple(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    vq: int | float
    ta: int | float
    pc: int | float
    form: ScoreForm = ScoreForm.INT

    @model_validator(mode="before")
    @classmethod
    def _coerce_form(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)) and len(data) == 3:
            data = dict(zip(("vq", "ta", "pc"), data))
        if not isinstance(data, dict):
            return data
        data = dict(data)
        values = [data.get(k) for k in ("vq", "ta", "pc")]
        form = data.get("form")
        if form is None:
            form = ScoreForm.INT if all(_is_integral(v) for v in values) else ScoreForm.FLOAT
        form = ScoreForm(form)
        for key, v in zip(("vq", "ta", "pc"), values):
            if v is None or isinstance(v, bool):
                continue
            if form is ScoreForm.INT:
                if not _is_integral(v):
                    raise ValueError(f"{key}={v!r} is not an integer score")
                data[key] = int(v)
            elif isinstance(v, (int, float)):
                data[key] = float(v)
        data["form"] = form
        return data

    @model_validator(mode="after")
    def _check_range(self) -> "ScoreTriple":
        for dim, v in zip(DIMENSIONS, self.values()):
            if not (SCORE_MIN <= v <= SCORE_MAX):
                raise ValueError(f"{dim.value}={v} outside [{SCORE_MIN}, {SCORE_MAX}]")
        return self

    @classmethod
    def of(cls, vq: int, ta: int, pc: int) -> "ScoreTriple":
        return cls(vq=vq, ta=ta, pc=pc, form=ScoreForm.INT)

    @classmethod
    def soft(cls, vq: float, ta: float, pc: float) -> "ScoreTriple":
        return cls(vq=vq, ta=ta, pc=pc, form=ScoreForm.FLOAT)

    def values(self) -> tuple[int | float, int | float, int | float]:
        return (self.vq, self.ta, self.pc)

    def get(self, dim: Dimension) -> int | float:
        return getattr(self, dim.value)

    def __iter__(self) -> Iterator[int | float]:  # type: ignore[override]
        return iter(self.values())

    def mean(self) -> float:
        return sum(self.values()) / 3.0

    @property
    def is_int(self) -> bool:
        return self.form is ScoreForm.INT


class PartialTriple(BaseModel):
    """Three dimensions, any of which may be absent (rescaled baselines, OOD ground truth)."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    vq: Optional[int | float] = None
    ta: Optional[int | float] = None
    pc: Optional[int | float] = None

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)) and len(data) == 3:
            return dict(zip(("vq", "ta", "pc"), data))
        return data

    @classmethod
    def from_triple(cls, t: ScoreTriple) -> "PartialTriple":
        return cls(vq=t.vq, ta=t.ta, pc=t.pc)

    def get(self, dim: Dimension) -> Optional[float]:
        return getattr(self, dim.value)

    def available(self) -> dict[Dimension, float]:
        return {d: v for d in DIMENSIONS if (v := self.get(d)) is not None}

    def mean(self) -> float:
        present = self.available()
        if not present:
            raise ValueError("no dimension available")
        return sum(present.values()) / len(present)


class TokenScoreDistribution(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    weights: dict[int, float]

    @model_validator(mode="after")
    def _check(self) -> "TokenScoreDistribution":
        for s, w in self.weights.items():
            if s < SCORE_MIN or s > SCORE_MAX:
                raise ValueError(f"score token {s} outside 1..5")
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"weight for {s} must be a finite non-negative number")
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one weight must be positive")
        return self

    @property
    def total(self) -> float:
        return sum(self.weights.values())


class DimensionComments(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    vq: Optional[str] = None
    ta: Optional[str] = None
    pc: Optional[str] = None

    def get(self, dim: Dimension) -> Optional[str]:
        return getattr(self, dim.value)


# -------------------------
# Records
# -------------------------
class VideoEntry(Record):
    video_id: str = Field(min_length=1)
    prompt_id: str
    prompt_text: str
    model_id: str
    tier: Tier
    media_uri: str
    fps: float = Field(gt=0)
    duration_s: float = Field(gt=0)
    width: int = Field(gt=0)
    height: int = Field(gt=0)


class AnnotationRecord(Record):
    video_id: str
    annotator_id: str
    scores: ScoreTriple
    comments: DimensionComments = Field(default_factory=DimensionComments)

    @model_validator(mode="after")
    def _int_scores(self) -> "AnnotationRecord":
        if not self.scores.is_int:
            raise ValueError("annotation scores must be integers")
        return self


class Judgment(Record):
    video_id: str
    raw_text: str = ""
    rationale: str = ""
    scores: Optional[ScoreTriple] = None
    token_dists: Optional[dict[Dimension, TokenScoreDistribution]] = None
    soft_scores: Optional[ScoreTriple] = None
    parse_failed: bool = False
    error: Optional[str] = None
    attempts: int = 1

    @model_validator(mode="after")
    def _check(self) -> "Judgment":
        if self.scores is None and not self.parse_failed:
            raise ValueError("judgment without scores must be flagged parse_failed")
        if self.scores is not None and not self.scores.is_int:
            raise ValueError("judgment scores must be integers")
        if self.soft_scores is not None:
            if self.token_dists is None:
                raise ValueError("soft_scores require token_dists")
            if self.soft_scores.is_int:
                raise ValueError("soft_scores must be float form")
        return self


class PreferencePair(Record):
    pair_id: str
    video_a: str
    video_b: str
    gt_label: PreferenceLabel
    dimension_scope: DimensionScope = DimensionScope.OVERALL

    @model_validator(mode="after")
    def _distinct(self) -> "PreferencePair":
        if self.video_a == self.video_b:
            raise ValueError("video_a and video_b must differ")
        return self


class GroundTruthRecord(Record):
    video_id: str
    scores: PartialTriple
    overall: Optional[float] = None


class PredictionRecord(Record):
    """Anything carrying per-video predicted scores: judgments or rescaled baseline rows."""

    video_id: str
    scores: Optional[PartialTriple] = None
    soft_scores: Optional[PartialTriple] = None
    parse_failed: bool = False

    def pick(self, use_soft: bool) -> Optional[PartialTriple]:
        if use_soft and self.soft_scores is not None:
            return self.soft_scores
        return self.scores
