# vidscore/bon.py
from __future__ import annotations

import logging
import math
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

from .constants import ScoreMode
from .errors import InputError, MissingExternalScore
from .schemas import Judgment, ScoreTriple

log = logging.getLogger(__name__)

TIE_BREAK = "mean > vq > lower index"
ALL_GENERATORS = "all"


@dataclass(frozen=True)
class CandidateSet:
    prompt_id: str
    candidates: Sequence[Judgment]
    generator: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.candidates:
            raise InputError(f"candidate set {self.prompt_id!r} is empty")
        for j in self.candidates:
            pid = j.extras.get("prompt_id")
            if pid is not None and str(pid) != self.prompt_id:
                raise InputError(f"candidate {j.video_id} belongs to prompt {pid!r}, not {self.prompt_id!r}")

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def key(self) -> str:
        return f"{self.generator}/{self.prompt_id}" if self.generator else self.prompt_id


def uses_soft(cs: CandidateSet, use_soft: bool = True) -> bool:
    """Soft only when every parsed candidate carries a soft triple; otherwise the whole set ranks on ints."""
    parsed = [j for j in cs.candidates if j.scores is not None]
    return use_soft and bool(parsed) and all(j.soft_scores is not None for j in parsed)


def _selection_triple(j: Judgment, soft: bool) -> Optional[ScoreTriple]:
    return j.soft_scores if soft else j.scores


def select_best(cs: CandidateSet, use_soft: bool = True) -> int:
    """Highest mean of the three dimensions; ties go to higher vq, then the lower index."""
    soft = uses_soft(cs, use_soft)

    def key(i: int) -> tuple[float, float, int]:
        t = _selection_triple(cs.candidates[i], soft)
        if t is None:
            return (-math.inf, -math.inf, -i)
        # rounding keeps float noise from breaking exact ties
        return (round(t.mean(), 9), float(t.vq), -i)

    return max(range(cs.n), key=key)


def random_select(cs: CandidateSet, seed: int | str) -> int:
    return random.Random(seed).randrange(cs.n)


def group_candidates(judgments: Iterable[Judgment]) -> list[CandidateSet]:
    """Sets keyed by (generator, prompt_id) in first-seen order."""
    groups: OrderedDict[tuple[Optional[str], str], list[Judgment]] = OrderedDict()
    for j in judgments:
        pid = j.extras.get("prompt_id")
        if pid is None:
            raise InputError(f"candidate {j.video_id} has no prompt_id")
        gen = j.extras.get("generator")
        groups.setdefault((None if gen is None else str(gen), str(pid)), []).append(j)
    return [CandidateSet(prompt_id=pid, candidates=js, generator=gen) for (gen, pid), js in groups.items()]


# -------------------------
# Report
# -------------------------
@dataclass
class BonRow:
    group: str
    n_sets: int
    random: dict[str, float]
    bon: dict[str, float]

    @property
    def delta(self) -> dict[str, float]:
        return {m: self.bon[m] - self.random[m] for m in self.bon}

    @property
    def random_avg(self) -> float:
        return sum(self.random.values()) / len(self.random)

    @property
    def bon_avg(self) -> float:
        return sum(self.bon.values()) / len(self.bon)

    def to_json(self) -> dict[str, Any]:
        return {
            "group": self.group,
            "n_sets": self.n_sets,
            "random": self.random,
            "bon": self.bon,
            "delta": self.delta,
            "random_avg": self.random_avg,
            "bon_avg": self.bon_avg,
        }


@dataclass
class BonReport:
    metrics: list[str]
    rows: list[BonRow]
    header: dict[str, Any]
    selections: list[dict[str, Any]] = field(default_factory=list)

    @property
    def overall(self) -> BonRow:
        return next(r for r in self.rows if r.group == ALL_GENERATORS)

    def to_json(self) -> dict[str, Any]:
        return {
            "header": self.header,
            "metrics": self.metrics,
            "rows": [r.to_json() for r in self.rows],
            "selections": self.selections,
        }


def _metric_value(external: Mapping[str, Mapping[str, float]], video_id: str, metric: str) -> float:
    value = (external.get(video_id) or {}).get(metric)
    if value is None:
        raise MissingExternalScore(video_id, metric)
    return float(value)


def _row(group: str, picks: list[tuple[str, str]], metrics: Sequence[str],
         external: Mapping[str, Mapping[str, float]]) -> BonRow:
    n = len(picks)
    return BonRow(
        group=group,
        n_sets=n,
        random={m: sum(_metric_value(external, r, m) for _, r in picks) / n for m in metrics},
        bon={m: sum(_metric_value(external, b, m) for b, _ in picks) / n for m in metrics},
    )


def bon_report(
    sets: Sequence[CandidateSet],
    external_scores: Mapping[str, Mapping[str, float]],
    seed: int | str,
    metrics: Optional[Sequence[str]] = None,
    use_soft: bool = True,
    score_mode: ScoreMode = ScoreMode.AS_WRITTEN,
) -> BonReport:
    """
    Mean external metric of the judge-selected candidate vs a seeded random one,
    over the same prompt sets. Rows: every set together, then one per generator.
    """
    if not sets:
        raise InputError("bon_report needs at least one candidate set")
    if metrics is None:
        first = sets[0].candidates[0].video_id
        metrics = list((external_scores.get(first) or {}).keys())
        if not metrics:
            raise MissingExternalScore(first, "<any>")
    metrics = list(metrics)

    for cs in sets:
        for j in cs.candidates:
            for m in metrics:
                _metric_value(external_scores, j.video_id, m)

    picks: list[tuple[str, str]] = []
    by_generator: OrderedDict[str, list[tuple[str, str]]] = OrderedDict()
    selections: list[dict[str, Any]] = []
    scales: set[str] = set()
    for cs in sets:
        scale = "soft" if uses_soft(cs, use_soft) else "int"
        scales.add(scale)
        best = cs.candidates[select_best(cs, use_soft)].video_id
        rand = cs.candidates[random_select(cs, f"{seed}:{cs.key}")].video_id
        picks.append((best, rand))
        if cs.generator:
            by_generator.setdefault(cs.generator, []).append((best, rand))
        selections.append({
            "prompt_id": cs.prompt_id,
            "generator": cs.generator,
            "n": cs.n,
            "bon_video": best,
            "random_video": rand,
            "selection_scores": scale,
        })

    rows = [_row(ALL_GENERATORS, picks, metrics, external_scores)]
    rows.extend(_row(gen, p, metrics, external_scores) for gen, p in by_generator.items())
    header = {
        "score_mode": ScoreMode(score_mode).value,
        "selection_scores": scales.pop() if len(scales) == 1 else "mixed",
        "tie_break": TIE_BREAK,
        "seed": seed,
        "n_sets": len(sets),
    }
    log.info("bon: %d sets, %d metrics, %d generator rows", len(sets), len(metrics), len(by_generator))
    return BonReport(metrics=metrics, rows=rows, header=header, selections=selections)
