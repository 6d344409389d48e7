"""Append-only operation log: one JSON object per line, bit-exact replayable.

Wire fields per event: ts_ms, session_id, image_id, kind, stage_tag, plus
box/category_id for adds and target_ref for removes. Encoding and decoding
are exact inverses so a log file replays to the same state byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from boxcamp.errors import LogIntegrityError, ParseError
from boxcamp.geometry import BoundingBox

__all__ = ["KINDS", "STAGE_TAGS", "OperationEvent", "encode_event", "decode_event",
           "write_log", "read_log", "append_line"]

KINDS = ("add", "remove", "accept_all")
STAGE_TAGS = ("fold1", "fold2")


@dataclass(frozen=True)
class OperationEvent:
    ts_ms: int
    session_id: str
    image_id: int
    kind: str
    stage_tag: str
    box: BoundingBox | None = None
    category_id: int | None = None
    target_ref: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LogIntegrityError(f"unknown event kind {self.kind!r}")
        if self.stage_tag not in STAGE_TAGS:
            raise LogIntegrityError(f"unknown stage tag {self.stage_tag!r}")
        if self.kind == "add":
            if self.box is None or self.category_id is None:
                raise LogIntegrityError("add event requires box and category_id")
            if self.target_ref is not None:
                raise LogIntegrityError("add event must not carry target_ref")
        elif self.kind == "remove":
            if self.target_ref is None:
                raise LogIntegrityError("remove event requires target_ref")
            if self.box is not None or self.category_id is not None:
                raise LogIntegrityError("remove event must not carry box fields")
        else:
            if self.box is not None or self.category_id is not None or self.target_ref is not None:
                raise LogIntegrityError("accept_all event carries no payload")


def encode_event(event: OperationEvent) -> str:
    doc: dict = {
        "ts_ms": event.ts_ms,
        "session_id": event.session_id,
        "image_id": event.image_id,
        "kind": event.kind,
        "stage_tag": event.stage_tag,
    }
    if event.kind == "add":
        b = event.box
        doc["box"] = [b.x, b.y, b.w, b.h]
        doc["category_id"] = event.category_id
    elif event.kind == "remove":
        doc["target_ref"] = event.target_ref
    return json.dumps(doc, separators=(",", ":"))


def decode_event(line: str) -> OperationEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"event log: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"event log: expected an object, got {doc!r}")
    try:
        box = doc.get("box")
        return OperationEvent(
            ts_ms=int(doc["ts_ms"]),
            session_id=str(doc["session_id"]),
            image_id=int(doc["image_id"]),
            kind=doc["kind"],
            stage_tag=doc["stage_tag"],
            box=BoundingBox(*box) if box is not None else None,
            category_id=doc.get("category_id"),
            target_ref=doc.get("target_ref"),
        )
    except KeyError as exc:
        raise ParseError(f"event log: missing field {exc.args[0]!r}") from exc


def write_log(events: Iterable[OperationEvent], target: str | Path | IO[str]) -> None:
    lines = "".join(encode_event(ev) + "\n" for ev in events)
    if hasattr(target, "write"):
        target.write(lines)
    else:
        Path(target).write_text(lines, encoding="utf-8")


def read_log(source: str | Path | IO[str]) -> Iterator[OperationEvent]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    for line in text.splitlines():
        if line.strip():
            yield decode_event(line)


def append_line(path: str | Path, event: OperationEvent) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(encode_event(event) + "\n")
