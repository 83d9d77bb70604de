# vidscore/frames.py
from __future__ import annotations

import base64
import logging
import mimetypes
import subprocess
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

from .core import round_half_away
from .errors import InputError
from .schemas import VideoEntry

log = logging.getLogger(__name__)

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".webp")


def _fmt_ts(t: float) -> str:
    return f"{t:.3f}".rstrip("0").rstrip(".") or "0"


def _data_uri(data: bytes, mime: str) -> str:
    return f"data:{mime};base64,{base64.b64encode(data).decode('ascii')}"


class FrameExtractor(ABC):
    """Turns sampled timestamps into image URLs the judge endpoint can fetch."""

    name: str

    @abstractmethod
    def frame_urls(self, entry: VideoEntry, timestamps: Sequence[float]) -> list[str]:
        raise NotImplementedError


class UriFrameExtractor(FrameExtractor):
    """Media fragment URIs; the endpoint is expected to seek the video itself."""

    name = "uri"

    def frame_urls(self, entry: VideoEntry, timestamps: Sequence[float]) -> list[str]:
        return [f"{entry.media_uri}#t={_fmt_ts(t)}" for t in timestamps]


class FrameDirectoryExtractor(FrameExtractor):
    """
    Pre-extracted frames under <root>/<video_id>/ (frame_0000.jpg, ...).
    When the directory holds more frames than timestamps, they are thinned evenly.
    """

    name = "dir"

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def frame_urls(self, entry: VideoEntry, timestamps: Sequence[float]) -> list[str]:
        folder = self.root / entry.video_id
        if not folder.is_dir():
            raise InputError(f"no frame directory for {entry.video_id}: {folder}")
        files = sorted(p for p in folder.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)
        if not files:
            raise InputError(f"frame directory is empty: {folder}")
        want = len(timestamps)
        if len(files) < want:
            log.warning("%s: %d frames on disk, %d requested", entry.video_id, len(files), want)
        elif len(files) > want:
            if want == 1:
                files = files[:1]
            else:
                step = (len(files) - 1) / (want - 1)
                files = [files[round_half_away(i * step)] for i in range(want)]
        out = []
        for p in files:
            mime = mimetypes.guess_type(p.name)[0] or "image/jpeg"
            out.append(_data_uri(p.read_bytes(), mime))
        return out


class FfmpegFrameExtractor(FrameExtractor):
    """Grabs one JPEG per timestamp with an external ffmpeg binary."""

    name = "ffmpeg"

    def __init__(self, binary: str = "ffmpeg", timeout_s: float = 60.0) -> None:
        self.binary = binary
        self.timeout_s = timeout_s

    def _grab(self, uri: str, t: float) -> bytes:
        cmd = [
            self.binary, "-v", "error", "-ss", _fmt_ts(t), "-i", uri,
            "-frames:v", "1", "-f", "image2", "-c:v", "mjpeg", "pipe:1",
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, check=True, timeout=self.timeout_s)
        except FileNotFoundError as e:
            raise InputError(f"ffmpeg binary not found: {self.binary}") from e
        except subprocess.CalledProcessError as e:
            detail = (e.stderr or b"").decode("utf-8", "replace").strip()[:200]
            raise InputError(f"ffmpeg failed on {uri} at t={_fmt_ts(t)}: {detail}") from e
        except subprocess.TimeoutExpired as e:
            raise InputError(f"ffmpeg timed out on {uri} at t={_fmt_ts(t)}") from e
        if not proc.stdout:
            raise InputError(f"ffmpeg produced no frame for {uri} at t={_fmt_ts(t)}")
        return proc.stdout

    def frame_urls(self, entry: VideoEntry, timestamps: Sequence[float]) -> list[str]:
        return [_data_uri(self._grab(entry.media_uri, t), "image/jpeg") for t in timestamps]


def get_frame_extractor(source: str, frame_dir: str | None = None) -> FrameExtractor:
    if source == "uri":
        return UriFrameExtractor()
    if source == "dir":
        if not frame_dir:
            raise InputError("frame_source 'dir' needs frame_dir")
        return FrameDirectoryExtractor(frame_dir)
    if source == "ffmpeg":
        return FfmpegFrameExtractor()
    raise ValueError(f"Unsupported frame source: {source}")
