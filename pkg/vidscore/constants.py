# vidscore/constants.py

from enum import Enum


class Dimension(str, Enum):
    VISUAL_QUALITY = "vq"
    TEXT_ALIGNMENT = "ta"
    PHYSICAL_CONSISTENCY = "pc"


# fixed iteration order
DIMENSIONS: tuple[Dimension, ...] = (
    Dimension.VISUAL_QUALITY,
    Dimension.TEXT_ALIGNMENT,
    Dimension.PHYSICAL_CONSISTENCY,
)

DIMENSION_TITLES = {
    Dimension.VISUAL_QUALITY: "Visual",
    Dimension.TEXT_ALIGNMENT: "Align",
    Dimension.PHYSICAL_CONSISTENCY: "Phy",
}


class ScoreForm(str, Enum):
    INT = "int"
    FLOAT = "float"


class Tier(str, Enum):
    PERFECT = "Perfect"
    GOOD = "Good"
    MODERATE = "Moderate"
    POOR = "Poor"


class PreferenceLabel(str, Enum):
    A = "A"
    B = "B"
    TIE = "Tie"


class DimensionScope(str, Enum):
    VQ = "vq"
    TA = "ta"
    PC = "pc"
    OVERALL = "overall"


class ScoreMode(str, Enum):
    AS_WRITTEN = "as-written"
    EXPECTATION = "expectation"


class StartPoint(str, Enum):
    SFT = "sft"
    BASE = "base"


class KrippendorffLevel(str, Enum):
    INTERVAL = "interval"
    ORDINAL = "ordinal"


class ReportFormat(str, Enum):
    TABLE = "table"
    CSV = "csv"
    JSON = "json"


class ReconcileStatus(str, Enum):
    ACCEPTED = "accepted"
    AVERAGED = "averaged"
    RESCORE_NEEDED = "rescore_needed"
    DISCARDED = "discarded"


class PromptSource(str, Enum):
    VIDPROM = "vidprom"
    KOALA = "koala"
    OCR_TEXT = "ocr_text"
    MULTI_ACTION = "multi_action"
    CAMERA_MOTION = "camera_motion"


class RejectReason(str, Enum):
    NSFW = "nsfw"
    TRIGGER_WORD = "trigger_word"
    LENGTH = "length"
    DURATION = "duration"
    CLARITY = "clarity"
    AESTHETIC = "aesthetic"
    # semantic checks
    VAGUE = "vague"
    NAMED_PEOPLE = "named_people"
    NO_MOTION = "no_motion"
    TOO_COMPLEX = "too_complex"
    # the judge asked to revise a source that may not be revised
    REVISION_NOT_PERMITTED = "revision_not_permitted"


class CameraMotion(str, Enum):
    ZOOM_IN = "Zoom in"
    ZOOM_OUT = "Zoom out"
    PAN_LEFT = "Pan left"
    PAN_RIGHT = "Pan right"
    PAN_UP = "Pan up"
    PAN_DOWN = "Pan down"
    TILT_UP = "Tilt up"
    TILT_DOWN = "Tilt down"
    TRACKING_SHOT = "Tracking shot"


class RescaleMethod(str, Enum):
    IDENTITY = "identity"
    LINEAR = "linear"
    GAUSSIAN_QUANTILE = "gaussian_quantile"
    ORDINAL_TABLE = "ordinal_table"


class DimMapping(str, Enum):
    BROADCAST = "broadcast"
    GOOD_MATCH = "good_match"
    CUSTOMIZED = "customized"


SCORE_MIN = 1
SCORE_MAX = 5
SCORE_VALUES: tuple[int, ...] = (1, 2, 3, 4, 5)

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"

# curation thresholds
NSFW_MAX_PROB = 0.2
TRIGGER_WORDS: tuple[str, ...] = (
    "screen size", "16:9", "1:1", "3:4", "4k", "8k", "seconds", "message", "attach",
)
VIDPROM_MIN_WORDS = 15
VIDPROM_MAX_WORDS = 100
KOALA_MAX_SEGMENT_S = 5.0
KOALA_MIN_CLARITY = 0.95
KOALA_MIN_AESTHETIC = 4.0

RECONCILE_MAX_ATTEMPTS = 3

# reward
LAMBDA_BY_START_POINT = {StartPoint.SFT: 0.0, StartPoint.BASE: 0.3}
DEFAULT_GROUP_SIZE = 8
ADVANTAGE_EPS = 1e-6

TIE_MARGIN_FRAC = 0.05

# tier-balanced sampling: per-tier (min, max) draws, fixed total per prompt
DEFAULT_TIER_BOUNDS: dict[Tier, tuple[int, int]] = {
    Tier.PERFECT: (1, 1),
    Tier.GOOD: (3, 4),
    Tier.MODERATE: (3, 4),
    Tier.POOR: (1, 2),
}
MODELS_PER_PROMPT = 10

# inference
DEFAULT_FPS = 2.0
DEFAULT_TEMPERATURE = 0.7


class Verdict(str, Enum):
    KEEP = "keep"
    REVISE = "revise"
    REJECT = "reject"
    # semantic screen could not be completed
    UNFILTERED = "unfiltered"


SEMANTIC_REJECT_REASONS: tuple[RejectReason, ...] = (
    RejectReason.VAGUE,
    RejectReason.NAMED_PEOPLE,
    RejectReason.NO_MOTION,
    RejectReason.TOO_COMPLEX,
)
