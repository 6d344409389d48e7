"""Dataset containers: images, ground-truth sets, detection sets, summaries."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from boxcamp.errors import ReferentialIntegrityError, ValidationError
from boxcamp.geometry import LabeledBox

_TRAILING_DIGITS = re.compile(r"(\d+)(?!.*\d)")


@dataclass(frozen=True)
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    sequence_id: str
    frame_index: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(
                f"image {self.id}: width/height must be positive, got {self.width}x{self.height}"
            )
        if self.frame_index < 0:
            raise ValidationError(f"image {self.id}: frame_index must be >= 0")


def sequence_from_file_name(file_name: str) -> tuple[str, int]:
    """Derive (sequence_id, frame_index) from a frame file name.

    Frames extracted from video are conventionally named ``<sequence><number>``;
    we take the last run of digits in the stem as the frame index and the
    prefix (sans separator) as the sequence id. Names without digits become
    single-frame sequences.
    """
    stem = file_name.replace("\\", "/").rsplit("/", 1)[-1]
    if "." in stem:
        stem = stem.rsplit(".", 1)[0]
    m = _TRAILING_DIGITS.search(stem)
    if m is None:
        return stem, 0
    prefix = stem[: m.start()].rstrip("-_. ")
    return (prefix or stem[: m.start()] or "seq"), int(m.group(1))


@dataclass
class AnnotationSet:
    """Ground truth: images, a category map, and unscored boxes per image.

    ``boxes`` holds one (possibly empty) list per image id. Category ids are
    contiguous from 1; when a source document used different ids they are
    kept in ``source_category_ids`` so re-export is faithful.
    """

    images: list[ImageRecord]
    categories: dict[int, str]
    boxes: dict[int, list[LabeledBox]]
    source_category_ids: dict[int, int] = field(default_factory=dict)

    def image_by_id(self) -> dict[int, ImageRecord]:
        return {im.id: im for im in self.images}

    def total_boxes(self) -> int:
        return sum(len(v) for v in self.boxes.values())

    def validate(self) -> None:
        ids = [im.id for im in self.images]
        if len(set(ids)) != len(ids):
            dupes = [i for i, n in Counter(ids).items() if n > 1]
            raise ValidationError(f"duplicate image ids: {sorted(dupes)}")
        per_seq: dict[str, set[int]] = {}
        for im in self.images:
            seen = per_seq.setdefault(im.sequence_id, set())
            if im.frame_index in seen:
                raise ValidationError(
                    f"sequence {im.sequence_id!r}: duplicate frame_index {im.frame_index}"
                )
            seen.add(im.frame_index)
        by_id = self.image_by_id()
        bad_images = sorted(set(self.boxes) - set(by_id))
        if bad_images:
            raise ReferentialIntegrityError(
                f"boxes reference unknown image ids: {bad_images}", bad_images
            )
        bad_cats = set()
        for image_id, entries in self.boxes.items():
            im = by_id[image_id]
            for lb in entries:
                if lb.score is not None:
                    raise ValidationError(
                        f"image {image_id}: ground-truth box carries a score"
                    )
                if lb.category_id not in self.categories:
                    bad_cats.add(lb.category_id)
                b = lb.box
                if b.x < 0 or b.y < 0 or b.x2 > im.width or b.y2 > im.height:
                    raise ValidationError(
                        f"image {image_id}: box {b.as_xywh()} outside "
                        f"{im.width}x{im.height}"
                    )
        if bad_cats:
            raise ReferentialIntegrityError(
                f"boxes reference unknown category ids: {sorted(bad_cats)}", sorted(bad_cats)
            )
        for image_id in by_id:
            if image_id not in self.boxes:
                raise ValidationError(f"image {image_id} missing from boxes map")


@dataclass
class DetectionSet:
    """Scored detector proposals grouped by image id."""

    boxes: dict[int, list[LabeledBox]]

    def total_boxes(self) -> int:
        return sum(len(v) for v in self.boxes.values())

    def validate(self) -> None:
        for image_id, entries in self.boxes.items():
            for lb in entries:
                if lb.score is None:
                    raise ValidationError(f"image {image_id}: detection without a score")


@dataclass(frozen=True)
class DatasetSummary:
    image_count: int
    instance_count: int
    category_count: int
    per_category_counts: dict[int, int]


def summarize(dataset: AnnotationSet) -> DatasetSummary:
    """Exact image/instance/category counts for a ground-truth set."""
    per_category = {cid: 0 for cid in dataset.categories}
    for entries in dataset.boxes.values():
        for lb in entries:
            per_category[lb.category_id] += 1
    return DatasetSummary(
        image_count=len(dataset.images),
        instance_count=sum(per_category.values()),
        category_count=len(dataset.categories),
        per_category_counts=per_category,
    )
