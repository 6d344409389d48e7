"""COCO-format ground truth and detection results.

Documents are UTF-8 JSON: ground truth with top-level ``images`` /
``annotations`` / ``categories`` arrays and ``bbox = [x, y, w, h]``;
detection results as a flat array of ``{image_id, category_id, bbox, score}``.
"""

from __future__ import annotations

import json
import warnings
from typing import IO

from boxcamp.dataio.types import AnnotationSet, ImageRecord, sequence_from_file_name
from boxcamp.errors import (
    ClampWarning,
    ParseError,
    ReferentialIntegrityError,
    ValidationError,
)
from boxcamp.geometry import BoundingBox, LabeledBox

SCORE_SLACK = 1e-9  # float serialization noise tolerated above 1.0


def _read_document(document: bytes | str | IO) -> object:
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ParseError(f"{where}: missing required field {key!r}")
    return entry[key]


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ParseError(f"{where}: expected an integer, got {value!r}")
        value = int(value)
    return value


def _parse_bbox(raw, where: str) -> tuple[float, float, float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ParseError(f"{where}: bbox must be [x, y, w, h], got {raw!r}")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bbox has non-numeric entries: {raw!r}") from exc


def _clamped_box(x: float, y: float, w: float, h: float, image: ImageRecord, where: str) -> BoundingBox:
    # Real exports commonly overflow the frame by a pixel; clamp with a
    # warning instead of rejecting. Fully-outside boxes stay errors.
    x1, y1 = max(x, 0.0), max(y, 0.0)
    x2, y2 = min(x + w, float(image.width)), min(y + h, float(image.height))
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        raise ValidationError(f"{where}: box {(x, y, w, h)} lies outside image {image.id}")
    if (x1, y1, x2, y2) != (x, y, x + w, y + h):
        warnings.warn(
            f"{where}: box {(x, y, w, h)} clamped to image {image.id} "
            f"({image.width}x{image.height})",
            ClampWarning,
            stacklevel=3,
        )
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)


def parse_coco_ground_truth(document: bytes | str | IO) -> AnnotationSet:
    """Parse a COCO annotation document into an AnnotationSet.

    Category ids are re-interned to contiguous ids starting at 1 (document
    order); the original ids are kept for re-export. Sequence metadata is
    read from optional ``sequence_id`` / ``frame_index`` fields on each
    image entry and otherwise derived from the file name.
    """
    doc = _read_document(document)
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object with images/annotations/categories")
    for key in ("images", "annotations", "categories"):
        if key not in doc or not isinstance(doc[key], list):
            raise ParseError(f"top level: missing or non-array {key!r}")

    categories: dict[int, str] = {}
    source_ids: dict[int, int] = {}
    original_to_interned: dict[int, int] = {}
    for i, entry in enumerate(doc["categories"]):
        where = f"categories[{i}]"
        original = _as_int(_require(entry, "id", where), where)
        name = _require(entry, "name", where)
        if original in original_to_interned:
            raise ParseError(f"{where}: duplicate category id {original}")
        interned = len(categories) + 1
        categories[interned] = str(name)
        source_ids[interned] = original
        original_to_interned[original] = interned

    images: list[ImageRecord] = []
    seen_ids: set[int] = set()
    for i, entry in enumerate(doc["images"]):
        where = f"images[{i}]"
        image_id = _as_int(_require(entry, "id", where), where)
        if image_id in seen_ids:
            raise ParseError(f"{where}: duplicate image id {image_id}")
        seen_ids.add(image_id)
        file_name = str(_require(entry, "file_name", where))
        width = _as_int(_require(entry, "width", where), where)
        height = _as_int(_require(entry, "height", where), where)
        has_seq = "sequence_id" in entry
        has_frame = "frame_index" in entry
        if has_seq != has_frame:
            raise ParseError(f"{where}: sequence_id and frame_index must appear together")
        if has_seq:
            sequence_id = str(entry["sequence_id"])
            frame_index = _as_int(entry["frame_index"], where)
        else:
            sequence_id, frame_index = sequence_from_file_name(file_name)
        images.append(
            ImageRecord(image_id, file_name, width, height, sequence_id, frame_index)
        )

    by_id = {im.id: im for im in images}
    boxes: dict[int, list[LabeledBox]] = {im.id: [] for im in images}
    dangling_images: set[int] = set()
    dangling_categories: set[int] = set()
    for i, entry in enumerate(doc["annotations"]):
        where = f"annotations[{i}]"
        image_id = _as_int(_require(entry, "image_id", where), where)
        original_cat = _as_int(_require(entry, "category_id", where), where)
        if image_id not in by_id:
            dangling_images.add(image_id)
            continue
        if original_cat not in original_to_interned:
            dangling_categories.add(original_cat)
            continue
        x, y, w, h = _parse_bbox(_require(entry, "bbox", where), where)
        box = _clamped_box(x, y, w, h, by_id[image_id], where)
        boxes[image_id].append(LabeledBox(box, original_to_interned[original_cat]))
    if dangling_images or dangling_categories:
        parts = []
        if dangling_images:
            parts.append(f"unknown image ids {sorted(dangling_images)}")
        if dangling_categories:
            parts.append(f"unknown category ids {sorted(dangling_categories)}")
        raise ReferentialIntegrityError(
            "annotations reference " + " and ".join(parts),
            sorted(dangling_images) + sorted(dangling_categories),
        )

    out = AnnotationSet(images, categories, boxes, source_ids)
    out.validate()
    return out


def write_coco_ground_truth(dataset: AnnotationSet) -> bytes:
    """Serialize an AnnotationSet to a COCO document.

    Inverse of :func:`parse_coco_ground_truth`: parsing the output
    reproduces the set exactly, including sequence metadata and the
    original category ids.
    """
    source_ids = dataset.source_category_ids or {cid: cid for cid in dataset.categories}
    doc = {
        "images": [
            {
                "id": im.id,
                "file_name": im.file_name,
                "width": im.width,
                "height": im.height,
                "sequence_id": im.sequence_id,
                "frame_index": im.frame_index,
            }
            for im in dataset.images
        ],
        "annotations": [],
        "categories": [
            {"id": source_ids[cid], "name": name}
            for cid, name in dataset.categories.items()
        ],
    }
    next_id = 1
    for im in dataset.images:
        for lb in dataset.boxes.get(im.id, []):
            b = lb.box
            doc["annotations"].append(
                {
                    "id": next_id,
                    "image_id": im.id,
                    "category_id": source_ids[lb.category_id],
                    "bbox": [b.x, b.y, b.w, b.h],
                    "area": b.w * b.h,
                    "iscrowd": 0,
                }
            )
            next_id += 1
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def parse_coco_detections(
    document: bytes | str | IO, categories: AnnotationSet | None = None
) -> "DetectionSet":
    """Parse a COCO results array into a DetectionSet.

    When ``categories`` (the ground-truth set the detections belong to) is
    given, category ids are remapped into its interned id space; otherwise
    they are kept as-is.
    """
    from boxcamp.dataio.types import DetectionSet

    doc = _read_document(document)
    if not isinstance(doc, list):
        raise ParseError("top level: expected an array of detection entries")

    remap = None
    if categories is not None:
        source_ids = categories.source_category_ids or {
            cid: cid for cid in categories.categories
        }
        remap = {orig: interned for interned, orig in source_ids.items()}

    boxes: dict[int, list[LabeledBox]] = {}
    for i, entry in enumerate(doc):
        where = f"detections[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object, got {entry!r}")
        image_id = _as_int(_require(entry, "image_id", where), where)
        category_id = _as_int(_require(entry, "category_id", where), where)
        x, y, w, h = _parse_bbox(_require(entry, "bbox", where), where)
        score_raw = _require(entry, "score", where)
        if isinstance(score_raw, bool) or not isinstance(score_raw, (int, float)):
            raise ParseError(f"{where}: score must be a number, got {score_raw!r}")
        score = float(score_raw)
        if 1.0 < score <= 1.0 + SCORE_SLACK:
            score = 1.0
        if not 0.0 <= score <= 1.0:
            raise ValidationError(f"{where}: score {score_raw} outside [0, 1]")
        if remap is not None:
            if category_id not in remap:
                raise ReferentialIntegrityError(
                    f"{where}: unknown category id {category_id}", [category_id]
                )
            category_id = remap[category_id]
        boxes.setdefault(image_id, []).append(
            LabeledBox(BoundingBox(x, y, w, h), category_id, score)
        )
    return DetectionSet(boxes)


def write_coco_detections(detections: "DetectionSet") -> bytes:
    """Serialize a DetectionSet to a COCO results array (image id order)."""
    entries = []
    for image_id in sorted(detections.boxes):
        for lb in detections.boxes[image_id]:
            b = lb.box
            entries.append(
                {
                    "image_id": image_id,
                    "category_id": lb.category_id,
                    "bbox": [b.x, b.y, b.w, b.h],
                    "score": lb.score,
                }
            )
    return json.dumps(entries, separators=(",", ":")).encode("utf-8")
