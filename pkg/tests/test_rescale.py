from __future__ import annotations

import itertools
import math

import pytest

from vidscore.constants import PreferenceLabel
from vidscore.errors import InputError, RescaleError, UnknownSpec
from vidscore.rescale import (
    QUANTILE_THRESHOLDS,
    RescaleSpec,
    _unrank_pair,
    derive_pairs_from_scores,
    gaussian_quantile_rescale,
    get_spec,
    identity_rescale,
    linear_rescale,
    load_rescale_specs,
    mj_bench_map,
    mj_bench_overall,
    phi_inv,
    rescale_native,
)
from vidscore.schemas import PartialTriple

MJ_VISUAL = {1: 0, 2: 0, 3: 1, 4: 1, 5: 2}
MJ_TEXT_PHYS = {1: 0, 2: 1, 3: 1, 4: 2, 5: 2}


def _phi_inv_oracle(p: float) -> float:
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if 0.5 * math.erfc(-mid / math.sqrt(2)) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# -------------------------
# Scalar rescaling
# -------------------------


def test_phi_inv_matches_bisection():
    for k in range(1, 100):
        p = k / 100
        assert phi_inv(p) == pytest.approx(_phi_inv_oracle(p), abs=1e-8)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_phi_inv_domain(p):
    with pytest.raises(RescaleError):
        phi_inv(p)


def test_quantile_thresholds():
    assert QUANTILE_THRESHOLDS == pytest.approx((-0.8416, -0.2533, 0.2533, 0.8416), abs=1e-4)


def test_gaussian_quantile_is_monotone():
    grid = [-5 + k * 1e-3 for k in range(10_001)]
    scores = [gaussian_quantile_rescale(z) for z in grid]
    assert all(b >= a for a, b in zip(scores, scores[1:]))
    assert scores[0] == 1 and scores[-1] == 5
    assert set(scores) == {1, 2, 3, 4, 5}


def test_gaussian_quantile_sigma_scales_input():
    for z in (-2.0, -0.5, 0.0, 0.3, 1.2, 2.7):
        for sigma in (0.5, 1.5, 3.0):
            assert gaussian_quantile_rescale(z, sigma) == gaussian_quantile_rescale(z / sigma, 1.0)


def test_gaussian_quantile_bins_are_half_open():
    assert gaussian_quantile_rescale(0.0) == 3
    assert gaussian_quantile_rescale(QUANTILE_THRESHOLDS[0]) == 2
    assert gaussian_quantile_rescale(QUANTILE_THRESHOLDS[3]) == 5


@pytest.mark.parametrize("x, expected", [(0.74, 4), (0.0, 1), (1.0, 5), (-3.0, 1), (7.0, 5), (0.5, 3)])
def test_linear_rescale_clamps(x, expected):
    assert linear_rescale(x, 0.0, 1.0) == expected


# -------------------------
# MJ-Bench
# -------------------------


def test_mj_bench_map_all_triples():
    for vq, ta, pc in itertools.product(range(1, 6), repeat=3):
        assert mj_bench_map(vq, ta, pc) == (MJ_VISUAL[vq], MJ_TEXT_PHYS[ta], MJ_TEXT_PHYS[pc])


@pytest.mark.parametrize("bad", [(0, 3, 3), (3, 6, 3), (3, 3, 2.5)])
def test_mj_bench_map_rejects_out_of_range(bad):
    with pytest.raises(InputError):
        mj_bench_map(*bad)


def test_mj_bench_overall():
    assert mj_bench_overall(PartialTriple(vq=4, ta=5)) == 2
    assert mj_bench_overall(PartialTriple(vq=1, ta=2, pc=2)) == 1
    assert mj_bench_overall(PartialTriple(vq=1, ta=1, pc=1)) == 0
    with pytest.raises(InputError):
        mj_bench_overall(PartialTriple())


# -------------------------
# Specs
# -------------------------


def test_q_align_broadcasts():
    assert rescale_native({"score": 0.74}, get_spec("q_align")).model_dump() == {"vq": 4, "ta": 4, "pc": 4}


def test_videoreward_drops_physical():
    got = rescale_native({"VQ": 1.8, "TA": -0.3, "MQ": 0.1}, get_spec("videoreward"))
    assert (got.vq, got.ta, got.pc) == (5, 3, None)


def test_aigve_macs_averages_sub_scores():
    native = {"technical": 4, "element": 3, "action": 5, "element_presence": 2, "action_presence": 3, "physics": 4}
    got = rescale_native(native, get_spec("aigve_macs"))
    assert (got.vq, got.ta, got.pc) == (4, 2.5, 4)


def test_videophy2_has_no_visual():
    got = rescale_native({"SA": 4, "PC": 2}, get_spec("videophy2"))
    assert (got.vq, got.ta, got.pc) == (None, 4, 2)


def test_identity_passes_native_scores():
    got = rescale_native({"vq": 4, "ta": 3, "pc": 5}, get_spec("identity"))
    assert (got.vq, got.ta, got.pc) == (4, 3, 5)
    got = rescale_native({"vq": 4.5, "ta": 2.25, "pc": 5.0}, get_spec("identity"))
    assert (got.vq, got.ta, got.pc) == (4.5, 2.25, 5)
    assert identity_rescale(3.7) == 3.7 and identity_rescale(2.0) == 2


def test_per_frame_lists_are_averaged():
    got = rescale_native({"score": [0.5, 1.5]}, get_spec("imagereward"))
    assert got.vq == 5


def test_mj_bench_ground_truth_spec():
    got = rescale_native({"vq": 5, "ta": 1, "pc": 3}, get_spec("mj_bench_gt"))
    assert (got.vq, got.ta, got.pc) == (2, 0, 1)
    with pytest.raises(InputError, match="ta=4.6"):
        rescale_native({"vq": 5, "ta": 4.6, "pc": 3}, get_spec("mj_bench_gt"))


def test_missing_field_is_named():
    with pytest.raises(RescaleError, match="'TA'"):
        rescale_native({"VQ": 1.0}, get_spec("videoreward"))


def test_unknown_spec_lists_available():
    with pytest.raises(UnknownSpec) as exc:
        get_spec("nope")
    assert "q_align" in exc.value.available


def test_packaged_specs_all_load():
    specs = load_rescale_specs()
    assert len(specs) == 12
    assert specs["videoreward"].sigma == 1.5


def test_spec_validation():
    with pytest.raises(ValueError):
        RescaleSpec(method="linear", src_min=1.0, src_max=1.0, dim_mapping="broadcast")
    with pytest.raises(ValueError):
        RescaleSpec(method="identity", dim_mapping="customized", rule="unknown")


def test_invalid_spec_file(tmp_path):
    path = tmp_path / "specs.yaml"
    path.write_text("bad:\n  method: gaussian_quantile\n  dim_mapping: broadcast\n", encoding="utf-8")
    with pytest.raises(RescaleError, match="bad"):
        load_rescale_specs(path)


# -------------------------
# Derived pairs
# -------------------------


def test_unrank_covers_upper_triangle():
    m = 7
    got = [_unrank_pair(k, m) for k in range(m * (m - 1) // 2)]
    assert got == list(itertools.combinations(range(m), 2))


def test_derive_pairs_is_seeded_and_distinct():
    entries = [(f"v{i:02d}", float(i % 6)) for i in range(20)]
    first = derive_pairs_from_scores(entries, 50, seed=3)
    again = derive_pairs_from_scores(entries, 50, seed=3)
    assert [p.to_json() for p in first] == [p.to_json() for p in again]
    assert len({frozenset((p.video_a, p.video_b)) for p in first}) == 50
    scores = dict(entries)
    for p in first:
        a, b = scores[p.video_a], scores[p.video_b]
        expected = PreferenceLabel.TIE if a == b else PreferenceLabel.A if a > b else PreferenceLabel.B
        assert p.gt_label is expected


def test_derive_pairs_bounds():
    entries = [("a", 1.0), ("b", 2.0), ("c", 3.0)]
    assert len(derive_pairs_from_scores(entries, 3, seed=0)) == 3
    with pytest.raises(InputError):
        derive_pairs_from_scores(entries, 4, seed=0)
    with pytest.raises(InputError):
        derive_pairs_from_scores(entries[:1], 0, seed=0)
