# vidscore/core.py
from __future__ import annotations

import hashlib
import json
import math
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path
from typing import Any

from .constants import DIMENSIONS, SCORE_MAX, SCORE_MIN
from .schemas import AnnotationRecord, ScoreTriple


def round_half_away(x: float) -> int:
    """Half away from zero: 2.5 -> 3, -2.5 -> -3."""
    if not math.isfinite(x):
        raise ValueError(f"cannot round {x!r}")
    # ROUND_HALF_UP in decimal is half-away-from-zero
    return int(Decimal(repr(float(x))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def round_score(x: float) -> int:
    return int(clamp(round_half_away(x), SCORE_MIN, SCORE_MAX))


def round_triple(t: ScoreTriple) -> ScoreTriple:
    if t.is_int:
        return t
    return ScoreTriple.of(*(round_score(v) for v in t.values()))


def annotation_warnings(record: AnnotationRecord) -> list[str]:
    out: list[str] = []
    for dim in DIMENSIONS:
        score = record.scores.get(dim)
        comment = record.comments.get(dim)
        if score < SCORE_MAX and not (comment or "").strip():
            out.append(
                f"{record.video_id}/{record.annotator_id}: {dim.value}={score} has no comment"
            )
    return out


# -------------------------
# Deterministic hashing (provenance)
# -------------------------
def canonical_json(payload: Any) -> str:
    return json.dumps(payload if payload is not None else {}, sort_keys=True, ensure_ascii=False)


def payload_digest(payload: Any) -> str:
    """Same input => same digest."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_digest(path: str | Path, chunk_size: int = 1 << 16) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            h.update(chunk)
    return h.hexdigest()


# -------------------------
# Packaged text assets
# -------------------------
def load_asset(name: str) -> str:
    return resources.files("vidscore").joinpath("assets", name).read_text(encoding="utf-8")
