"""Line-delimited JSON reading and writing with line-numbered errors."""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Iterator, TypeVar

from pydantic import BaseModel, ValidationError

M = TypeVar("M", bound=BaseModel)


class RecordError(ValueError):
    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line


def dumps(record) -> str:
    """Stable one-line JSON: sorted keys, no ASCII escaping of text."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False, allow_nan=False)


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for each non-blank line."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(str(path), lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise RecordError(str(path), lineno, "record must be a JSON object")
            yield lineno, obj


def read_models(path: str | Path, model: type[M]) -> list[tuple[int, M]]:
    out = []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append((lineno, model.model_validate(obj)))
        except ValidationError as exc:
            err = exc.errors()[0]
            where = ".".join(str(x) for x in err["loc"]) or "<record>"
            raise RecordError(str(path), lineno, f"{where}: {err['msg']}") from exc
    return out


def write_jsonl(target: str | Path | IO[str], records: Iterable[dict]) -> int:
    n = 0
    if isinstance(target, (str, Path)):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            return write_jsonl(fh, records)
    for rec in records:
        target.write(dumps(rec) + "\n")
        n += 1
    return n
