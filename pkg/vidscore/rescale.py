# vidscore/rescale.py
from __future__ import annotations

import logging
import random
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from scipy.special import ndtri

from .constants import DIMENSIONS, SCORE_MAX, SCORE_MIN, Dimension, DimMapping, PreferenceLabel, RescaleMethod
from .core import clamp, load_asset, round_half_away
from .errors import InputError, RescaleError, UnknownSpec
from .schemas import PartialTriple, PreferencePair

log = logging.getLogger(__name__)


# -------------------------
# Scalar rescaling
# -------------------------
def phi_inv(p: float) -> float:
    """Inverse CDF of the standard normal."""
    if not 0.0 < p < 1.0:
        raise RescaleError(f"phi_inv needs 0 < p < 1 (got {p})")
    return float(ndtri(p))


QUANTILE_THRESHOLDS: tuple[float, float, float, float] = tuple(  # type: ignore[assignment]
    phi_inv(p) for p in (0.2, 0.4, 0.6, 0.8)
)


def linear_rescale(x: float, src_min: float, src_max: float) -> int:
    if not src_max > src_min:
        raise RescaleError(f"invalid source range [{src_min}, {src_max}]")
    x = clamp(float(x), src_min, src_max)
    return round_half_away(SCORE_MIN + (SCORE_MAX - SCORE_MIN) * (x - src_min) / (src_max - src_min))


def gaussian_quantile_rescale(z: float, sigma: float = 1.0) -> int:
    """Five ordinal bins cut at the 20/40/60/80% normal quantiles of z / sigma."""
    if not sigma > 0:
        raise RescaleError(f"sigma must be positive (got {sigma})")
    u = z / sigma
    for score, upper in enumerate(QUANTILE_THRESHOLDS, start=SCORE_MIN):
        if u < upper:
            return score
    return SCORE_MAX


def identity_rescale(x: float) -> int | float:
    """Native 1..5 scores pass through unchanged; averaged fields stay fractional and round only at evaluation."""
    x = float(x)
    return int(x) if x.is_integer() else x


# -------------------------
# MJ-Bench-Video {0,1,2}
# -------------------------
def _check_1_5(name: str, x: int) -> int:
    if isinstance(x, bool) or int(x) != x or not (SCORE_MIN <= x <= SCORE_MAX):
        raise InputError(f"{name}={x!r} must be an integer in 1..5")
    return int(x)


def _mj_visual(x: int) -> int:
    return 0 if x <= 2 else 1 if x <= 4 else 2


def _mj_text_phys(x: int) -> int:
    return 0 if x == 1 else 1 if x <= 3 else 2


def mj_bench_map(x_vq: int, x_ta: int, x_pc: int) -> tuple[int, int, int]:
    return (
        _mj_visual(_check_1_5("vq", x_vq)),
        _mj_text_phys(_check_1_5("ta", x_ta)),
        _mj_text_phys(_check_1_5("pc", x_pc)),
    )


def mj_bench_overall(triple: PartialTriple) -> int:
    """Mean of the dimensions present, rounded, then binned with the text/physical rule."""
    try:
        mean = triple.mean()
    except ValueError as e:
        raise InputError("mj_bench_overall needs at least one dimension") from e
    return _mj_text_phys(round_half_away(mean))


# -------------------------
# Specs
# -------------------------
def _field(native: Mapping[str, Any], name: str) -> float:
    if name not in native or native[name] is None:
        raise RescaleError(f"native scores lack required field {name!r}")
    value = native[name]
    # image scorers report one score per sampled frame
    if isinstance(value, (list, tuple)):
        if not value:
            raise RescaleError(f"native field {name!r} is an empty list")
        return sum(float(v) for v in value) / len(value)
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise RescaleError(f"native field {name!r} is not numeric: {value!r}") from e


def _mean_fields(native: Mapping[str, Any], names: Sequence[str]) -> float:
    return sum(_field(native, n) for n in names) / len(names)


CustomRule = Callable[[Mapping[str, Any]], dict[Dimension, Optional[float]]]

CUSTOM_RULES: dict[str, CustomRule] = {
    # motion quality (MQ) has no counterpart
    "videoreward": lambda n: {
        Dimension.VISUAL_QUALITY: _field(n, "VQ"),
        Dimension.TEXT_ALIGNMENT: _field(n, "TA"),
        Dimension.PHYSICAL_CONSISTENCY: None,
    },
    "aigve_macs": lambda n: {
        Dimension.VISUAL_QUALITY: _mean_fields(n, ("technical", "element", "action")),
        Dimension.TEXT_ALIGNMENT: _mean_fields(n, ("element_presence", "action_presence")),
        Dimension.PHYSICAL_CONSISTENCY: _field(n, "physics"),
    },
    "videophy2": lambda n: {
        Dimension.VISUAL_QUALITY: None,
        Dimension.TEXT_ALIGNMENT: _field(n, "SA"),
        Dimension.PHYSICAL_CONSISTENCY: _field(n, "PC"),
    },
}

ORDINAL_TABLES = ("mj_bench",)


class RescaleSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = ""
    method: RescaleMethod
    src_min: Optional[float] = None
    src_max: Optional[float] = None
    sigma: Optional[float] = None
    table: Optional[str] = None
    dim_mapping: DimMapping
    rule: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "RescaleSpec":
        if self.method is RescaleMethod.LINEAR:
            if self.src_min is None or self.src_max is None or not self.src_max > self.src_min:
                raise ValueError("linear rescaling needs src_max > src_min")
        if self.method is RescaleMethod.GAUSSIAN_QUANTILE and not (self.sigma or 0) > 0:
            raise ValueError("gaussian_quantile rescaling needs sigma > 0")
        if self.method is RescaleMethod.ORDINAL_TABLE and self.table not in ORDINAL_TABLES:
            raise ValueError(f"ordinal_table needs table in {ORDINAL_TABLES}")
        if self.dim_mapping is DimMapping.CUSTOMIZED and self.rule not in CUSTOM_RULES:
            raise ValueError(f"customized mapping needs rule in {sorted(CUSTOM_RULES)}")
        return self


def map_dimensions(native: Mapping[str, Any], spec: RescaleSpec) -> dict[Dimension, Optional[float]]:
    """Native fields -> per-dimension raw values; absent dimensions stay None."""
    if spec.dim_mapping is DimMapping.BROADCAST:
        value = _field(native, "score")
        return {dim: value for dim in DIMENSIONS}
    if spec.dim_mapping is DimMapping.GOOD_MATCH:
        return {dim: _field(native, dim.value) for dim in DIMENSIONS}
    return CUSTOM_RULES[spec.rule or ""](native)


def _rescale_value(x: float, spec: RescaleSpec) -> int | float:
    if spec.method is RescaleMethod.IDENTITY:
        return identity_rescale(x)
    if spec.method is RescaleMethod.LINEAR:
        return linear_rescale(x, spec.src_min, spec.src_max)  # type: ignore[arg-type]
    if spec.method is RescaleMethod.GAUSSIAN_QUANTILE:
        return gaussian_quantile_rescale(x, spec.sigma)  # type: ignore[arg-type]
    raise RescaleError(f"method {spec.method.value} is not a per-value rescaling")


def rescale_native(native: Mapping[str, Any], spec: RescaleSpec) -> PartialTriple:
    raw = map_dimensions(native, spec)
    if spec.method is RescaleMethod.ORDINAL_TABLE:
        ints = [_check_1_5(d.value, identity_rescale(raw[d])) for d in DIMENSIONS]  # type: ignore[arg-type]
        return PartialTriple(**dict(zip(("vq", "ta", "pc"), mj_bench_map(*ints))))
    return PartialTriple(**{
        dim.value: (None if raw[dim] is None else _rescale_value(raw[dim], spec))  # type: ignore[arg-type]
        for dim in DIMENSIONS
    })


def load_rescale_specs(path: str | Path | None = None) -> dict[str, RescaleSpec]:
    """Named specs from a YAML mapping; the packaged baseline table when path is None."""
    text = load_asset("rescale_specs.yaml") if path is None else Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise RescaleError("rescale spec file must be a mapping of name -> spec")
    specs: dict[str, RescaleSpec] = {}
    for name, body in data.items():
        try:
            specs[name] = RescaleSpec.model_validate({"name": name, **(body or {})})
        except ValidationError as e:
            raise RescaleError(f"invalid rescale spec {name!r}: {e}") from e
    return specs


def get_spec(name: str, specs: Mapping[str, RescaleSpec] | None = None) -> RescaleSpec:
    specs = specs if specs is not None else load_rescale_specs()
    if name not in specs:
        raise UnknownSpec(name, specs)
    return specs[name]


# -------------------------
# Pairs from point scores
# -------------------------
def _unrank_pair(k: int, m: int) -> tuple[int, int]:
    """k-th (i, j), i < j, in row-major order over an m-item upper triangle."""
    i = 0
    row = m - 1
    while k >= row:
        k -= row
        i += 1
        row -= 1
    return i, i + 1 + k


def derive_pairs_from_scores(
    entries: Sequence[tuple[str, float]],
    n_pairs: int,
    seed: int | str,
) -> list[PreferencePair]:
    """Seeded sample of distinct unordered pairs; label = higher score side, Tie on equality."""
    m = len(entries)
    if m < 2:
        raise InputError("need at least two scored entries")
    total = m * (m - 1) // 2
    if n_pairs > total:
        raise InputError(f"requested {n_pairs} pairs but only {total} distinct pairs exist")
    if n_pairs < 0:
        raise InputError("n_pairs must be >= 0")
    rng = random.Random(seed)
    out: list[PreferencePair] = []
    for k, idx in enumerate(rng.sample(range(total), n_pairs)):
        i, j = _unrank_pair(idx, m)
        (vid_a, sa), (vid_b, sb) = entries[i], entries[j]
        if sa > sb:
            label = PreferenceLabel.A
        elif sa < sb:
            label = PreferenceLabel.B
        else:
            label = PreferenceLabel.TIE
        out.append(PreferencePair(pair_id=f"pair-{k:05d}", video_a=vid_a, video_b=vid_b, gt_label=label))
    return out
