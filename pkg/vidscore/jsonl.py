# vidscore/jsonl.py
from __future__ import annotations

import contextlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, TextIO, TypeVar

from pydantic import BaseModel, ValidationError

from .errors import InputError

log = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


@dataclass(frozen=True)
class LineError:
    line_no: int
    message: str

    def to_json(self) -> dict[str, Any]:
        return {"line_no": self.line_no, "error": self.message}


def iter_lines(path: str | Path) -> Iterator[tuple[int, dict[str, Any] | LineError]]:
    """Yield (line_no, object) for every non-blank line; malformed lines yield a LineError."""
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                yield line_no, LineError(line_no, f"invalid JSON: {e.msg}")
                continue
            if not isinstance(obj, dict):
                yield line_no, LineError(line_no, "expected a JSON object")
                continue
            yield line_no, obj


def iter_records(
    path: str | Path, model: type[M]
) -> Iterator[tuple[int, M | LineError]]:
    for line_no, obj in iter_lines(path):
        if isinstance(obj, LineError):
            yield line_no, obj
            continue
        try:
            yield line_no, model.model_validate(obj)
        except ValidationError as e:
            first = e.errors()[0]
            loc = ".".join(str(p) for p in first.get("loc", ())) or "record"
            yield line_no, LineError(line_no, f"{loc}: {first.get('msg')}")


def read_records(path: str | Path, model: type[M]) -> list[M]:
    """Strict read: the first malformed line raises InputError."""
    out: list[M] = []
    for line_no, rec in iter_records(path, model):
        if isinstance(rec, LineError):
            raise InputError(f"{path}:{line_no}: {rec.message}")
        out.append(rec)
    return out


def read_dicts(path: str | Path) -> list[dict[str, Any]]:
    out: list[dict[str, Any]] = []
    for line_no, obj in iter_lines(path):
        if isinstance(obj, LineError):
            raise InputError(f"{path}:{line_no}: {obj.message}")
        out.append(obj)
    return out


def dumps(obj: BaseModel | dict[str, Any]) -> str:
    if isinstance(obj, BaseModel):
        data = obj.model_dump(mode="json", exclude_none=True)
    else:
        data = obj
    return json.dumps(data, ensure_ascii=False, sort_keys=False)


def write_line(f: TextIO, obj: BaseModel | dict[str, Any]) -> None:
    f.write(dumps(obj))
    f.write("\n")


@contextlib.contextmanager
def atomic_writer(path: str | Path, mode: str = "w") -> Iterator[TextIO]:
    """
    Write to <path>.tmp and rename onto <path> on success.
    On error the .tmp file is removed and the target is left untouched.
    mode="a" seeds the temp file with the current contents (resume).
    """
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "w", encoding="utf-8") as f:
        if mode == "a" and target.exists():
            existing = target.read_text(encoding="utf-8")
            if existing and not existing.endswith("\n"):
                existing += "\n"
            f.write(existing)
        try:
            yield f
            f.flush()
            os.fsync(f.fileno())
        except BaseException:
            f.close()
            with contextlib.suppress(FileNotFoundError):
                tmp.unlink()
            raise
    os.replace(tmp, target)


def write_records(path: str | Path, rows: Iterable[BaseModel | dict[str, Any]]) -> int:
    n = 0
    with atomic_writer(path) as f:
        for row in rows:
            write_line(f, row)
            n += 1
    log.debug("wrote %d rows to %s", n, path)
    return n
