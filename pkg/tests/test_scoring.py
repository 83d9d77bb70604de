from __future__ import annotations

import math
import random

import pytest

from vidscore.constants import Dimension, ScoreMode
from vidscore.core import round_triple
from vidscore.errors import InputError, MissingScores, OutOfRange
from vidscore.providers.sim import tokenize_with_logprobs
from vidscore.schemas import ScoreTriple, TokenScoreDistribution
from vidscore.scoring import (
    build_query,
    harvest_token_dists,
    parse_detailed,
    parse_judgment,
    render_judgment,
    sample_frame_timestamps,
    soft_score,
    soft_triple,
)

# -------------------------
# Frame sampling
# -------------------------


def test_timestamps_two_fps():
    assert sample_frame_timestamps(2.0, 2.0, 32) == [0.0, 0.5, 1.0, 1.5]


def test_timestamps_thinned_keep_first_and_last():
    assert sample_frame_timestamps(1.0, 8.0, 4) == pytest.approx([0.0, 0.25, 0.625, 0.875])


def test_timestamps_ten_fps():
    assert sample_frame_timestamps(0.8, 10.0, 32) == pytest.approx([k / 10 for k in range(8)])


def test_timestamps_strictly_increasing():
    for duration in (0.3, 1.7, 5.0, 9.99):
        for fps in (2.0, 4.0, 8.0):
            ts = sample_frame_timestamps(duration, fps, 16)
            assert ts[0] == 0.0
            assert all(b > a for a, b in zip(ts, ts[1:]))
            assert ts[-1] < duration


@pytest.mark.parametrize("duration, fps", [(0.0, 2.0), (-1.0, 2.0), (2.0, 0.0)])
def test_timestamps_reject_non_positive(duration, fps):
    with pytest.raises(InputError):
        sample_frame_timestamps(duration, fps, 8)


# -------------------------
# Query
# -------------------------


def test_build_query():
    q = build_query("a red fox runs")
    assert "a red fox runs." in q
    assert "The score must be in the range of 1 - 5." in q
    assert q.count("physical/common-sense consistency") >= 1
    assert build_query("a red fox runs") == q


def test_build_query_dollar_is_literal():
    q = build_query("costs $5 and ${t2v_prompt} $$")
    assert "costs $5 and ${t2v_prompt} $$." in q


def test_build_query_rejects_empty():
    with pytest.raises(InputError):
        build_query("   ")


# -------------------------
# Parsing
# -------------------------

PARSE_CORPUS = [
    ("<think>ok</think> visual quality: 4, text alignment: 3, physical consistency: 5", "ok", (4, 3, 5)),
    (
        '<think>r</think>{"visual quality": 4, "text-to-video alignment": 3, '
        '"physical/common-sense consistency": 2}',
        "r",
        (4, 3, 2),
    ),
    (
        "<think>fine</think>\n- **Visual Quality**: 5\n- **Text Alignment**: 4\n- **Physical Consistency**: 3",
        "fine",
        (5, 4, 3),
    ),
    ("<think>x</think>\nphysical: 2\nvisual: 4\nalignment: 3", "x", (4, 3, 2)),
    ("<think>x</think> visual quality: 4/5, text alignment: 3/5, physical: 5/5", "x", (4, 3, 5)),
    ("<think>x</think>\n4, 3, 5", "x", (4, 3, 5)),
    ("VISUAL QUALITY: 3\nTEXT-TO-VIDEO ALIGNMENT: 3\nPHYSICAL/COMMON-SENSE CONSISTENCY: 1", "", (3, 3, 1)),
    ("<think>frames 1 and 2 are blurry</think>visual quality: 2\ntext alignment: 4\nphysical: 3", "frames 1 and 2 are blurry", (2, 4, 3)),
    ("<think> spaced </think> visual: 1 | t2v alignment: 2 | common-sense: 3", "spaced", (1, 2, 3)),
    ("<think>a</think>Visual quality score is 5 out of 5. Text: 5. Physics: 4.", "a", (5, 5, 4)),
    ("scores: 2, 3, 2", "", (2, 3, 2)),
    ("<think>r</think> Visual Quality = 3; Text Alignment = 4; Physical Consistency = 4", "r", (3, 4, 4)),
    ("<think>r</think>\nvisual quality: 5\ntext-to-video alignment: 5\nphysical/common-sense consistency: 5", "r", (5, 5, 5)),
    ("<think>r</think>Visual:1 Text:1 Physical:1", "r", (1, 1, 1)),
    ('<think>r</think>{"visual_quality": 2, "text_alignment": 3, "physical_consistency": 4}', "r", (2, 3, 4)),
    ("<think>r</think> visual quality: 4.0, text alignment: 3.0, physical: 5.0", "r", (4, 3, 5)),
    (
        "<think>r</think>\n| Visual Quality | 4 |\n| Text Alignment | 2 |\n| Physical Consistency | 3 |",
        "r",
        (4, 2, 3),
    ),
    ("<think>r</think> text alignment: 2, physical consistency: 1, visual quality: 5", "r", (5, 2, 1)),
    (
        "<think>r</think> visual quality: 4, text alignment: 3, physical consistency: 5. Final visual: 2",
        "r",
        (4, 3, 5),
    ),
    ("<think>r</think> 4/5 3/5 2/5", "r", (4, 3, 2)),
    ("<think>r</think>\n5\n4\n3", "r", (5, 4, 3)),
    ("visual: 2, text: 2, physical: 2", "", (2, 2, 2)),
    ("<think>unfinished visual: 3, text: 4, physical: 5", "", (3, 4, 5)),
    ("<think>visual 1, text 1, physical 1</think> visual: 5, text: 4, physical: 3", "visual 1, text 1, physical 1", (5, 4, 3)),
    ("<think>\n  multi\nline\n</think>\nvisual: 3\ntext: 3\nphysics: 2", "multi\nline", (3, 3, 2)),
    ("<think>r</think> visual: 4, t2v: 4, phy: 4", "r", (4, 4, 4)),
    ("<think>r</think> visual: 3, alignment: 2, commonsense: 1", "r", (3, 2, 1)),
    ("<think>r</think> visual: 3, text: 3, physical: 3. Overall the video is good.", "r", (3, 3, 3)),
    ("<think>r</think>\nVisual quality - 2\nText alignment - 5\nPhysical - 4", "r", (2, 5, 4)),
    ("<think>r</think> visual   :   4 ,text:3,physical:5", "r", (4, 3, 5)),
    ("<think>r</think>\n**Visual quality:** 4\n**Text alignment:** 3\n**Physical consistency:** 2", "r", (4, 3, 2)),
    ("<think>r</think> The video scores 3, 4 and 5.", "r", (3, 4, 5)),
]


@pytest.mark.parametrize("raw, rationale, scores", PARSE_CORPUS)
def test_parse_corpus(raw, rationale, scores):
    got_rationale, got = parse_judgment(raw)
    assert got_rationale == rationale
    assert got.values() == scores
    assert got.is_int


@pytest.mark.parametrize(
    "raw, error",
    [
        ("<think>ok</think> visual: 6, text: 3, physical: 2", OutOfRange),
        ("<think>ok</think> visual: 3.5, text: 3, physical: 2", OutOfRange),
        ("<think>ok</think> visual: 4", MissingScores),
        ("<think>no scores in 3 frames</think> nothing to see", MissingScores),
        ("", MissingScores),
        ("<think>x</think> visual: 4, text: 3, overall: 2", MissingScores),
        ("<think>x</think> visual: 4, text: 3\n5", MissingScores),
        ("<think>x</think> visual quality: 4, physical: 2, final score 3", MissingScores),
        ("<think>x</think> 4, 3", MissingScores),
        ("<think>x</think>", MissingScores),
        ("<think>x</think> visual: 0, text: 3, physical: 3", OutOfRange),
        ("<think>x</think> visual: 4, text: 3, physical: -1", OutOfRange),
        ("<think>x</think> visual: 4, text: 3, physical: 2.5", OutOfRange),
    ],
)
def test_parse_errors(raw, error):
    with pytest.raises(error):
        parse_judgment(raw)


def test_out_of_range_and_missing_are_distinct():
    assert not issubclass(OutOfRange, MissingScores)
    assert not issubclass(MissingScores, OutOfRange)


def test_render_parse_round_trip():
    for t in [(1, 1, 1), (4, 3, 5), (5, 2, 1)]:
        s = ScoreTriple.of(*t)
        assert parse_judgment(render_judgment("motion is smooth; 2 hands merge", s)) == (
            "motion is smooth; 2 hands merge",
            s,
        )


def test_render_rejects_think_tags():
    with pytest.raises(InputError):
        render_judgment("a <think> b", ScoreTriple.of(3, 3, 3))


def test_parse_spans_point_at_values():
    raw = render_judgment("ok", ScoreTriple.of(4, 3, 5))
    parsed = parse_detailed(raw)
    for dim, expected in zip((Dimension.VISUAL_QUALITY, Dimension.TEXT_ALIGNMENT, Dimension.PHYSICAL_CONSISTENCY), "435"):
        start, end = parsed.spans[dim]
        assert raw[start:end] == expected


# -------------------------
# Soft scores
# -------------------------


@pytest.mark.parametrize("mode", list(ScoreMode))
@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
def test_one_hot_is_exact(mode, s):
    assert soft_score({s: 1.0}, mode) == float(s)
    assert soft_score({s: 0.25}, mode) == float(s)


def test_uniform_expectation_is_three():
    assert soft_score({s: 0.2 for s in range(1, 6)}, ScoreMode.EXPECTATION) == pytest.approx(3.0, abs=1e-12)


def test_worked_case_diverges_between_modes():
    dist = TokenScoreDistribution(weights={4: 0.6, 5: 0.4})
    assert soft_score(dist, ScoreMode.AS_WRITTEN) == pytest.approx(2.4, abs=1e-12)
    assert soft_score(dist, ScoreMode.EXPECTATION) == pytest.approx(4.4, abs=1e-12)


def test_as_written_ties_break_to_larger_score_and_clamp():
    assert soft_score({2: 0.5, 3: 0.5}, ScoreMode.AS_WRITTEN) == pytest.approx(1.5)
    assert soft_score({1: 0.4, 2: 0.3, 3: 0.3}, ScoreMode.AS_WRITTEN) == 1.0


def test_soft_scores_in_range_and_scale_free():
    rng = random.Random(3)
    for _ in range(500):
        weights = {s: rng.random() for s in range(1, 6)}
        scaled = {s: 7.5 * w for s, w in weights.items()}
        for mode in ScoreMode:
            v = soft_score(weights, mode)
            assert 1.0 <= v <= 5.0
            assert soft_score(scaled, mode) == pytest.approx(v, abs=1e-12)


def test_expectation_rounds_to_argmax_when_mass_is_concentrated():
    rng = random.Random(11)
    for _ in range(500):
        dists = {}
        argmax = []
        for dim in Dimension:
            top = rng.randint(1, 5)
            rest = [rng.random() for _ in range(4)]
            scale = 0.12 / sum(rest)
            others = [s for s in range(1, 6) if s != top]
            weights = {s: r * scale for s, r in zip(others, rest)}
            weights[top] = 0.88
            dists[dim] = TokenScoreDistribution(weights=weights)
            argmax.append(top)
        soft = soft_triple(dists, ScoreMode.EXPECTATION)
        assert round_triple(soft).values() == tuple(argmax)


def test_soft_score_rejects_zero_mass():
    with pytest.raises(InputError):
        soft_score({3: 0.0}, ScoreMode.EXPECTATION)


def test_harvest_token_dists_from_logprobs():
    raw = render_judgment("ok", ScoreTriple.of(4, 3, 5))
    tokens = tokenize_with_logprobs(raw, top_logprobs=5, peak=0.7)
    dists = harvest_token_dists(raw, tokens, parse_detailed(raw).spans)
    assert dists is not None
    vq = dists[Dimension.VISUAL_QUALITY].weights
    assert vq == pytest.approx({4: 0.7, 3: 0.15, 5: 0.15})
    pc = dists[Dimension.PHYSICAL_CONSISTENCY].weights
    assert pc == pytest.approx({5: 0.7, 4: 0.3})
    soft = soft_triple(dists, ScoreMode.AS_WRITTEN)
    assert soft.values() == pytest.approx((2.8, 2.1, 3.5))
    assert soft_triple(dists, ScoreMode.EXPECTATION).vq == pytest.approx(4.0)


def test_harvest_returns_none_when_tokens_do_not_line_up():
    raw = render_judgment("ok", ScoreTriple.of(4, 3, 5))
    tokens = tokenize_with_logprobs(raw + " extra")
    assert harvest_token_dists(raw, tokens, parse_detailed(raw).spans) is None
    assert harvest_token_dists(raw, [], parse_detailed(raw).spans) is None


def test_harvest_finds_score_inside_a_longer_token():
    raw = "visual quality: 4, text alignment: 3, physical consistency: 5."
    spans = parse_detailed(raw).spans
    cuts = sorted({0, *(s - 2 for s, _ in spans.values()), len(raw)})
    tokens = []
    for a, b in zip(cuts, cuts[1:]):
        digit = raw[a + 2] if a + 2 < len(raw) and raw[a + 2].isdigit() else None
        top = []
        if digit is not None:
            other = "1" if digit != "1" else "2"
            top = [
                {"token": digit, "logprob": math.log(0.6)},
                {"token": other, "logprob": math.log(0.4)},
            ]
        tokens.append({"token": raw[a:b], "logprob": 0.0, "top_logprobs": top})
    dists = harvest_token_dists(raw, tokens, spans)
    assert dists is not None
    assert dists[Dimension.VISUAL_QUALITY].weights == pytest.approx({4: 0.6, 1: 0.4})
    assert dists[Dimension.TEXT_ALIGNMENT].weights == pytest.approx({3: 0.6, 1: 0.4})
    assert dists[Dimension.PHYSICAL_CONSISTENCY].weights == pytest.approx({5: 0.6, 1: 0.4})
