from __future__ import annotations

import random

import pytest

from vidscore.bon import CandidateSet, bon_report, group_candidates, random_select, select_best, uses_soft
from vidscore.constants import DIMENSIONS
from vidscore.core import round_triple
from vidscore.errors import InputError, MissingExternalScore
from vidscore.schemas import Judgment, ScoreTriple, TokenScoreDistribution

_DISTS = {dim: TokenScoreDistribution(weights={3: 1.0}) for dim in DIMENSIONS}


def soft_candidate(video_id: str, vq: float, ta: float, pc: float, **extras) -> Judgment:
    soft = ScoreTriple.soft(vq, ta, pc)
    return Judgment(
        video_id=video_id,
        scores=round_triple(soft),
        soft_scores=soft,
        token_dists=_DISTS,
        **extras,
    )


def int_candidate(video_id: str, vq: int, ta: int, pc: int, **extras) -> Judgment:
    return Judgment(video_id=video_id, scores=ScoreTriple.of(vq, ta, pc), **extras)


def test_select_best_breaks_mean_tie_on_visual_quality():
    means = [3.2, 4.1, 3.9, 2.0, 4.1]
    vqs = [3, 4, 5, 2, 5]
    cands = []
    for i, (m, v) in enumerate(zip(means, vqs)):
        rest = (3 * m - v) / 2
        cands.append(soft_candidate(f"c{i}", v, rest, rest))
    assert select_best(CandidateSet("p1", cands)) == 4


def test_select_best_all_equal_picks_first():
    cands = [int_candidate(f"c{i}", 3, 3, 3) for i in range(4)]
    assert select_best(CandidateSet("p1", cands), use_soft=False) == 0


def test_select_best_single_candidate():
    assert select_best(CandidateSet("p1", [int_candidate("c0", 1, 1, 1)])) == 0


def test_select_best_ranks_unparseable_last():
    cands = [Judgment(video_id="c0", raw_text="?", parse_failed=True), int_candidate("c1", 1, 1, 1)]
    assert select_best(CandidateSet("p1", cands)) == 1


def test_select_best_uses_int_scores_without_soft():
    cands = [soft_candidate("c0", 4.4, 4.4, 4.4), soft_candidate("c1", 4.6, 4.6, 4.6)]
    cs = CandidateSet("p1", cands)
    assert select_best(cs) == 1
    assert select_best(cs, use_soft=False) == 1
    tied = CandidateSet("p1", [soft_candidate("c0", 4.1, 4.1, 4.1), soft_candidate("c1", 4.2, 4.2, 4.2)])
    assert select_best(tied) == 1
    assert select_best(tied, use_soft=False) == 0


def test_select_best_is_permutation_equivariant():
    rng = random.Random(4)
    for _ in range(200):
        cands = [
            soft_candidate(f"c{i}", rng.uniform(1, 5), rng.uniform(1, 5), rng.uniform(1, 5))
            for i in range(6)
        ]
        best = cands[select_best(CandidateSet("p1", cands))].video_id
        shuffled = cands[:]
        rng.shuffle(shuffled)
        assert shuffled[select_best(CandidateSet("p1", shuffled))].video_id == best


def test_random_select_is_uniform():
    cs = CandidateSet("p1", [int_candidate(f"c{i}", 3, 3, 3) for i in range(5)])
    counts = [0] * 5
    for seed in range(10_000):
        counts[random_select(cs, seed)] += 1
    expected = 10_000 / 5
    chi2 = sum((c - expected) ** 2 / expected for c in counts)
    # df = 4, p = 0.001
    assert chi2 < 18.47


def test_candidate_set_validation():
    with pytest.raises(InputError):
        CandidateSet("p1", [])
    with pytest.raises(InputError):
        CandidateSet("p1", [int_candidate("c0", 3, 3, 3, prompt_id="p2")])


def test_group_candidates_by_generator_and_prompt():
    rows = [
        int_candidate("a", 3, 3, 3, prompt_id="p1", generator="g1"),
        int_candidate("b", 3, 3, 3, prompt_id="p1", generator="g2"),
        int_candidate("c", 3, 3, 3, prompt_id="p1", generator="g1"),
        int_candidate("d", 3, 3, 3, prompt_id="p2", generator="g1"),
    ]
    sets = group_candidates(rows)
    assert [(s.key, s.n) for s in sets] == [("g1/p1", 2), ("g2/p1", 1), ("g1/p2", 1)]
    with pytest.raises(InputError):
        group_candidates([int_candidate("e", 3, 3, 3)])


def test_bon_never_below_random_and_matches_per_set_max():
    rng = random.Random(8)
    sets, external = [], {}
    per_set_max = []
    for s in range(10_000):
        cands = []
        for i in range(4):
            t = [rng.randint(1, 5) for _ in range(3)]
            vid = f"s{s}c{i}"
            cands.append(int_candidate(vid, *t, prompt_id=f"p{s}"))
            external[vid] = {"judge_mean": sum(t) / 3}
        sets.append(CandidateSet(f"p{s}", cands))
        per_set_max.append(max(external[c.video_id]["judge_mean"] for c in cands))
    report = bon_report(sets, external, seed=1, use_soft=False)
    row = report.overall
    assert row.bon["judge_mean"] == pytest.approx(sum(per_set_max) / len(per_set_max))
    assert row.bon["judge_mean"] > row.random["judge_mean"]
    assert report.header["selection_scores"] == "int"


def test_bon_missing_external_score():
    sets = [CandidateSet("p1", [int_candidate("a", 3, 3, 3), int_candidate("b", 4, 4, 4)])]
    with pytest.raises(MissingExternalScore) as exc:
        bon_report(sets, {"a": {"aesthetic": 0.5}}, seed=0, metrics=["aesthetic"])
    assert exc.value.video_id == "b"


def test_bon_generator_rows():
    rows = []
    external = {}
    for gen in ("kling", "wan"):
        for p in ("p1", "p2"):
            for i, q in enumerate((2, 5)):
                vid = f"{gen}-{p}-{i}"
                rows.append(int_candidate(vid, q, q, q, prompt_id=p, generator=gen))
                external[vid] = {"aesthetic": q / 10, "motion": q / 5}
    report = bon_report(group_candidates(rows), external, seed="7")
    assert [r.group for r in report.rows] == ["all", "kling", "wan"]
    assert [r.n_sets for r in report.rows] == [4, 2, 2]
    for row in report.rows:
        assert row.bon == pytest.approx({"aesthetic": 0.5, "motion": 1.0})
        assert row.delta["aesthetic"] >= 0
    assert report.metrics == ["aesthetic", "motion"]
    assert report.header["tie_break"] == "mean > vq > lower index"
    assert report.header["selection_scores"] == "int"
    assert len(report.selections) == 4
    data = report.to_json()
    assert data["rows"][0]["bon_avg"] == pytest.approx(0.75)


def test_bon_report_is_seeded():
    rows = [int_candidate(f"c{i}", 3, 3, 3, prompt_id="p1") for i in range(6)]
    external = {f"c{i}": {"m": float(i)} for i in range(6)}
    a = bon_report(group_candidates(rows), external, seed=3).to_json()
    b = bon_report(group_candidates(rows), external, seed=3).to_json()
    assert a == b


def test_mixed_soft_and_int_candidates_rank_on_ints():
    a = soft_candidate("a", 2.8, 2.8, 2.8)
    a = a.model_copy(update={"scores": ScoreTriple.of(4, 4, 4)})
    b = int_candidate("b", 3, 3, 3)
    cs = CandidateSet("p1", [a, b])
    assert not uses_soft(cs)
    assert select_best(cs) == 0


def test_header_reports_scale_actually_used():
    external = {v: {"m": 1.0} for v in ("a", "b", "c", "d")}
    soft_set = CandidateSet("p1", [soft_candidate("a", 3, 3, 3), soft_candidate("b", 4, 4, 4)])
    int_set = CandidateSet("p2", [int_candidate("c", 3, 3, 3), soft_candidate("d", 4, 4, 4)])
    assert bon_report([soft_set], external, seed=0).header["selection_scores"] == "soft"
    assert bon_report([int_set], external, seed=0).header["selection_scores"] == "int"
    report = bon_report([soft_set, int_set], external, seed=0)
    assert report.header["selection_scores"] == "mixed"
    assert [s["selection_scores"] for s in report.selections] == ["soft", "int"]
    assert bon_report([soft_set], external, seed=0, use_soft=False).header["selection_scores"] == "int"


def test_bon_below_random_when_judge_is_anti_correlated():
    rng = random.Random(12)
    sets, external = [], {}
    for s in range(2_000):
        cands = []
        for i in range(4):
            t = [rng.randint(1, 5) for _ in range(3)]
            vid = f"s{s}c{i}"
            cands.append(int_candidate(vid, *t, prompt_id=f"p{s}"))
            external[vid] = {"quality": -sum(t) / 3}
        sets.append(CandidateSet(f"p{s}", cands))
    row = bon_report(sets, external, seed=2, use_soft=False).overall
    assert row.bon["quality"] < row.random["quality"]
    assert row.delta["quality"] < 0
