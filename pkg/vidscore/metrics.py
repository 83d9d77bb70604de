# vidscore/metrics.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import krippendorff
import numpy as np

from .constants import (
    DIMENSIONS,
    TIE_MARGIN_FRAC,
    Dimension,
    DimensionScope,
    KrippendorffLevel,
    PreferenceLabel,
)
from .core import round_half_away
from .errors import InputError, InsufficientData, JoinError, UndefinedCorrelation
from .schemas import PartialTriple, PreferencePair

log = logging.getLogger(__name__)

# float slack on the tie boundary: |a - b| == margin must count as a tie
_TIE_TOLERANCE = 1e-12


def _paired(preds: Sequence[float], gts: Sequence[float]) -> int:
    if len(preds) != len(gts):
        raise InputError(f"length mismatch: {len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise InputError("no items to score")
    return len(preds)


# -------------------------
# Point scores
# -------------------------
def exact_accuracy(preds: Sequence[int], gts: Sequence[int]) -> float:
    n = _paired(preds, gts)
    hits = sum(1 for p, g in zip(preds, gts) if p == g)
    return 100.0 * hits / n


def relaxed_accuracy(preds: Sequence[int], gts: Sequence[int]) -> float:
    n = _paired(preds, gts)
    hits = sum(1 for p, g in zip(preds, gts) if abs(p - g) <= 1)
    return 100.0 * hits / n


def plcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation x 100 (population moments)."""
    n = _paired(x, y)
    if n < 2:
        raise InputError("plcc needs at least two items")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.std() == 0 or ya.std() == 0:
        raise UndefinedCorrelation("undefined correlation: constant series")
    r = float(np.corrcoef(xa, ya)[0, 1])
    return 100.0 * max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class DimensionMetrics:
    n: int
    accuracy: float
    relaxed_accuracy: float
    plcc: Optional[float]


@dataclass(frozen=True)
class PointScoreReport:
    dims: dict[Dimension, Optional[DimensionMetrics]]
    avg_accuracy: Optional[float]
    avg_relaxed_accuracy: Optional[float]
    avg_plcc: Optional[float]
    n: int

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"n": self.n}
        for dim in DIMENSIONS:
            m = self.dims.get(dim)
            out[dim.value] = None if m is None else {
                "n": m.n,
                "accuracy": m.accuracy,
                "relaxed_accuracy": m.relaxed_accuracy,
                "plcc": m.plcc,
            }
        out["avg"] = {
            "accuracy": self.avg_accuracy,
            "relaxed_accuracy": self.avg_relaxed_accuracy,
            "plcc": self.avg_plcc,
        }
        return out


def _mean_present(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


def point_score_report(preds: Sequence[PartialTriple], gts: Sequence[PartialTriple]) -> PointScoreReport:
    """
    Accuracy on rounded predictions, PLCC on raw ones.
    A dimension missing from either side is skipped for that item; a dimension
    with no items at all is reported as absent and left out of the averages.
    """
    _paired(preds, gts)
    dims: dict[Dimension, Optional[DimensionMetrics]] = {}
    for dim in DIMENSIONS:
        pairs = [
            (p.get(dim), g.get(dim))
            for p, g in zip(preds, gts)
            if p.get(dim) is not None and g.get(dim) is not None
        ]
        if not pairs:
            dims[dim] = None
            continue
        raw_p = [float(p) for p, _ in pairs]
        raw_g = [float(g) for _, g in pairs]
        int_p = [round_half_away(v) for v in raw_p]
        int_g = [round_half_away(v) for v in raw_g]
        try:
            corr: Optional[float] = plcc(raw_p, raw_g) if len(pairs) >= 2 else None
        except UndefinedCorrelation:
            log.warning("PLCC undefined for %s (constant series); reported as null", dim.value)
            corr = None
        dims[dim] = DimensionMetrics(
            n=len(pairs),
            accuracy=exact_accuracy(int_p, int_g),
            relaxed_accuracy=relaxed_accuracy(int_p, int_g),
            plcc=corr,
        )
    present = [m for m in dims.values() if m is not None]
    return PointScoreReport(
        dims=dims,
        avg_accuracy=_mean_present([m.accuracy for m in present]),
        avg_relaxed_accuracy=_mean_present([m.relaxed_accuracy for m in present]),
        avg_plcc=_mean_present([m.plcc for m in present]),
        n=len(preds),
    )


# -------------------------
# Inter-annotator agreement
# -------------------------
def _reliability_matrix(ratings: Sequence[Sequence[Optional[float]]]) -> np.ndarray:
    rows = [[np.nan if v is None else float(v) for v in row] for row in ratings]
    if not rows or len({len(r) for r in rows}) != 1:
        raise InputError("ratings must be a non-empty annotator x item matrix with equal row lengths")
    return np.asarray(rows, dtype=np.float64)


def krippendorff_alpha(
    ratings: Sequence[Sequence[Optional[float]]],
    level: KrippendorffLevel | str = KrippendorffLevel.INTERVAL,
) -> float:
    """
    Alpha x 100 over an annotator x item matrix; None marks a missing rating.
    Items with fewer than two ratings carry no pairable values and are ignored.
    """
    level = KrippendorffLevel(level)
    data = _reliability_matrix(ratings)
    present = ~np.isnan(data)
    pairable = present.sum(axis=0) >= 2
    if int(pairable.sum()) < 2:
        raise InsufficientData("krippendorff_alpha needs at least 2 items with 2 or more ratings")

    units = data[:, pairable]
    # zero observed disagreement: every pairable item is unanimous
    spread = np.nanmax(units, axis=0) - np.nanmin(units, axis=0)
    if np.all(spread == 0):
        return 100.0

    alpha = krippendorff.alpha(reliability_data=units, level_of_measurement=level.value)
    return 100.0 * float(alpha)


def relaxed_match_iaa(rows: Sequence[Sequence[float]]) -> float:
    """Share of items whose annotator scores span at most one point."""
    if not rows:
        raise InputError("relaxed_match_iaa needs at least one item")
    hits = 0
    for i, row in enumerate(rows):
        if len(row) < 2:
            raise InputError(f"item {i} has fewer than two scores")
        if max(row) - min(row) <= 1:
            hits += 1
    return 100.0 * hits / len(rows)


@dataclass(frozen=True)
class AgreementReport:
    relaxed_match: float
    alpha: Optional[float]
    n: int

    def to_json(self) -> dict[str, Any]:
        return {"relaxed_match": self.relaxed_match, "alpha": self.alpha, "n": self.n}


def agreement_report(
    ratings: Sequence[Sequence[Optional[float]]],
    level: KrippendorffLevel | str = KrippendorffLevel.INTERVAL,
) -> AgreementReport:
    data = _reliability_matrix(ratings)
    items = []
    for col in data.T:
        vals = [float(v) for v in col if not math.isnan(v)]
        if len(vals) >= 2:
            items.append(vals)
    if not items:
        raise InsufficientData("no item has two or more ratings")
    try:
        alpha: Optional[float] = krippendorff_alpha(ratings, level)
    except InsufficientData as e:
        log.warning("alpha not reported: %s", e)
        alpha = None
    return AgreementReport(relaxed_match=relaxed_match_iaa(items), alpha=alpha, n=len(items))


# -------------------------
# Preference
# -------------------------
def preference_from_scores(
    score_a: float,
    score_b: float,
    scale_min: float,
    scale_max: float,
    margin_frac: float = TIE_MARGIN_FRAC,
) -> PreferenceLabel:
    """Tie when |a - b| <= margin_frac x (scale_max - scale_min), otherwise the higher side."""
    if not scale_max > scale_min:
        raise InputError(f"scale_max must exceed scale_min (got [{scale_min}, {scale_max}])")
    margin = margin_frac * (scale_max - scale_min)
    if abs(score_a - score_b) <= margin + _TIE_TOLERANCE:
        return PreferenceLabel.TIE
    return PreferenceLabel.A if score_a > score_b else PreferenceLabel.B


def predict_preference(
    score_a: float,
    score_b: float,
    scale_min: float,
    scale_max: float,
    margin_frac: float = TIE_MARGIN_FRAC,
    integer_scores: bool = False,
) -> PreferenceLabel:
    """Integer-score models tie only on equal scores; float models use the margin rule."""
    if integer_scores:
        if score_a == score_b:
            return PreferenceLabel.TIE
        return PreferenceLabel.A if score_a > score_b else PreferenceLabel.B
    return preference_from_scores(score_a, score_b, scale_min, scale_max, margin_frac)


def preference_accuracy(
    preds: Sequence[PreferenceLabel],
    gts: Sequence[PreferenceLabel],
    include_ties: bool,
) -> float:
    if len(preds) != len(gts):
        raise InputError(f"length mismatch: {len(preds)} predictions vs {len(gts)} labels")
    pairs = list(zip(preds, gts))
    if not include_ties:
        pairs = [(p, g) for p, g in pairs if PreferenceLabel(g) is not PreferenceLabel.TIE]
    if not pairs:
        raise InsufficientData("no pairs to score")
    hits = sum(1 for p, g in pairs if PreferenceLabel(p) is PreferenceLabel(g))
    return 100.0 * hits / len(pairs)


@dataclass(frozen=True)
class PreferenceScopeResult:
    n_with_ties: int
    n_without_ties: int
    gt_ties: int
    accuracy_with_ties: Optional[float]
    accuracy_without_ties: Optional[float]
    skipped: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "n_with_ties": self.n_with_ties,
            "n_without_ties": self.n_without_ties,
            "gt_ties": self.gt_ties,
            "accuracy_with_ties": self.accuracy_with_ties,
            "accuracy_without_ties": self.accuracy_without_ties,
            "skipped": self.skipped,
        }


@dataclass(frozen=True)
class PreferenceReport:
    scopes: dict[DimensionScope, PreferenceScopeResult]
    predictions: dict[str, PreferenceLabel]

    def to_json(self) -> dict[str, Any]:
        return {scope.value: res.to_json() for scope, res in self.scopes.items()}


def scope_score(triple: PartialTriple, scope: DimensionScope) -> Optional[float]:
    """Score a video gets for a pair scope; Overall is the mean of the dimensions present."""
    scope = DimensionScope(scope)
    if scope is DimensionScope.OVERALL:
        present = triple.available()
        return sum(present.values()) / len(present) if present else None
    value = triple.get(Dimension(scope.value))
    return None if value is None else float(value)


def preference_report(
    pairs: Sequence[PreferencePair],
    scores: Mapping[str, PartialTriple],
    scale_min: float,
    scale_max: float,
    margin_frac: float = TIE_MARGIN_FRAC,
    integer_scores: bool = False,
) -> PreferenceReport:
    missing = sorted(
        p.pair_id for p in pairs if p.video_a not in scores or p.video_b not in scores
    )
    if missing:
        raise JoinError("pairs without judgments for both videos", missing)

    buckets: dict[DimensionScope, list[tuple[PreferenceLabel, PreferenceLabel]]] = {}
    skipped: dict[DimensionScope, int] = {}
    predictions: dict[str, PreferenceLabel] = {}
    for pair in pairs:
        a = scope_score(scores[pair.video_a], pair.dimension_scope)
        b = scope_score(scores[pair.video_b], pair.dimension_scope)
        if a is None or b is None:
            skipped[pair.dimension_scope] = skipped.get(pair.dimension_scope, 0) + 1
            continue
        pred = predict_preference(a, b, scale_min, scale_max, margin_frac, integer_scores)
        predictions[pair.pair_id] = pred
        buckets.setdefault(pair.dimension_scope, []).append((pred, pair.gt_label))

    scopes: dict[DimensionScope, PreferenceScopeResult] = {}
    for scope in DimensionScope:
        rows = buckets.get(scope, [])
        if not rows and scope not in skipped:
            continue
        preds = [p for p, _ in rows]
        gts = [g for _, g in rows]
        gt_ties = sum(1 for g in gts if g is PreferenceLabel.TIE)
        scopes[scope] = PreferenceScopeResult(
            n_with_ties=len(rows),
            n_without_ties=len(rows) - gt_ties,
            gt_ties=gt_ties,
            accuracy_with_ties=preference_accuracy(preds, gts, True) if rows else None,
            accuracy_without_ties=(
                preference_accuracy(preds, gts, False) if len(rows) > gt_ties else None
            ),
            skipped=skipped.get(scope, 0),
        )
    return PreferenceReport(scopes=scopes, predictions=predictions)
