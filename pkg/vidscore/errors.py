# vidscore/errors.py
from __future__ import annotations

from typing import Iterable


class VidscoreError(Exception):
    """Base class for every error the harness raises on purpose."""


class InputError(VidscoreError, ValueError):
    pass


class ConfigError(VidscoreError, ValueError):
    pass


class ParseError(VidscoreError, ValueError):
    """Judge output could not be turned into a score triple."""


class MissingScores(ParseError):
    pass


class OutOfRange(ParseError):
    pass


class EndpointError(VidscoreError, RuntimeError):
    def __init__(self, message: str, attempts: int = 0) -> None:
        super().__init__(message)
        self.attempts = attempts


class TransientEndpointError(EndpointError):
    """Retryable: transport failure, 429 or 5xx."""


class GroupTooSmall(InputError):
    pass


class UndefinedCorrelation(InputError):
    pass


class InsufficientData(InputError):
    pass


class RescaleError(InputError):
    pass


class UnknownSpec(RescaleError):
    def __init__(self, name: str, available: Iterable[str]) -> None:
        self.name = name
        self.available = sorted(available)
        super().__init__(f"unknown rescale spec {name!r}; available: {', '.join(self.available)}")


class CurationError(InputError):
    pass


class RevisionNotPermitted(CurationError):
    pass


class SupplierError(VidscoreError, RuntimeError):
    def __init__(self, message: str, attempts: int) -> None:
        super().__init__(f"{message} (attempt {attempts})")
        self.attempts = attempts


class MissingExternalScore(InputError):
    def __init__(self, video_id: str, metric: str) -> None:
        super().__init__(f"missing external score {metric!r} for video {video_id!r}")
        self.video_id = video_id
        self.metric = metric


class JoinError(InputError):
    def __init__(self, message: str, missing: Iterable[str]) -> None:
        self.missing = sorted(missing)
        preview = ", ".join(self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"{message}: {preview}{more}")
