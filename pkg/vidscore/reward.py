# vidscore/reward.py
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .constants import ADVANTAGE_EPS, LAMBDA_BY_START_POINT, StartPoint
from .errors import GroupTooSmall, InputError, ParseError
from .schemas import Judgment, ScoreTriple
from .scoring import parse_judgment, split_rationale

# (exact matches, off-by-one) -> reward; anything else, including any
# dimension off by 2 or more, earns nothing
_ACCURACY_TABLE: dict[tuple[int, int], float] = {
    (3, 0): 1.0,
    (2, 1): 0.7,
    (1, 2): 0.4,
    (0, 3): 0.1,
}


def accuracy_reward(pred: ScoreTriple, gt: ScoreTriple) -> float:
    if not (pred.is_int and gt.is_int):
        raise InputError("accuracy_reward needs integer triples; round soft scores first")
    diffs = [abs(p - g) for p, g in zip(pred.values(), gt.values())]
    exact = sum(1 for d in diffs if d == 0)
    off_by_one = sum(1 for d in diffs if d == 1)
    return _ACCURACY_TABLE.get((exact, off_by_one), 0.0)


def format_reward(raw_text: str) -> float:
    rationale, _ = split_rationale(raw_text)
    if rationale is None or not rationale.strip():
        return 0.0
    try:
        parse_judgment(raw_text)
    except ParseError:
        return 0.0
    return 1.0


def default_lambda(start_point: StartPoint | str) -> float:
    return LAMBDA_BY_START_POINT[StartPoint(start_point)]


@dataclass(frozen=True)
class RewardBreakdown:
    r_acc: float
    r_fmt: float
    lam: float
    total: float

    def to_json(self) -> dict[str, Any]:
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        return data


def total_reward(
    pred: Optional[ScoreTriple],
    gt: ScoreTriple,
    raw_text: str,
    lam: float,
) -> RewardBreakdown:
    """R = R_acc + lambda * R_fmt. A missing prediction (unparseable output) earns R_acc = 0."""
    if lam < 0:
        raise InputError(f"lambda must be >= 0 (got {lam})")
    r_acc = accuracy_reward(pred, gt) if pred is not None else 0.0
    r_fmt = format_reward(raw_text)
    return RewardBreakdown(r_acc=r_acc, r_fmt=r_fmt, lam=lam, total=r_acc + lam * r_fmt)


def group_advantages(rewards: Sequence[float]) -> list[float]:
    """(r - mean) / (std + eps) with population std; an all-equal group gets exact zeros."""
    if len(rewards) < 2:
        raise GroupTooSmall(f"group too small: {len(rewards)} reward(s), need at least 2")
    r = np.asarray(rewards, dtype=np.float64)
    if np.all(r == r[0]):
        return [0.0] * len(r)
    adv = (r - r.mean()) / (r.std() + ADVANTAGE_EPS)
    return [float(a) for a in adv]


@dataclass(frozen=True)
class RolloutGroup:
    gt: ScoreTriple
    judgments: list[Judgment]
    breakdowns: list[RewardBreakdown]
    advantages: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.judgments)
        if n < 2:
            raise GroupTooSmall(f"group too small: {n} rollout(s)")
        if len(self.breakdowns) != n or len(self.advantages) != n:
            raise InputError("rollout group lists must have equal length")

    @property
    def rewards(self) -> list[float]:
        return [b.total for b in self.breakdowns]


def build_rollout_group(gt: ScoreTriple, judgments: Sequence[Judgment], lam: float) -> RolloutGroup:
    breakdowns = [
        total_reward(None if j.parse_failed else j.scores, gt, j.raw_text, lam) for j in judgments
    ]
    advantages = group_advantages([b.total for b in breakdowns])
    return RolloutGroup(gt=gt, judgments=list(judgments), breakdowns=breakdowns, advantages=advantages)
