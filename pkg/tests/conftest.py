from __future__ import annotations

import pytest

from boxcamp.dataio.types import AnnotationSet, ImageRecord
from boxcamp.geometry import BoundingBox, LabeledBox


def box(x, y, w, h):
    return BoundingBox(float(x), float(y), float(w), float(h))


def gt(x, y, w, h, category=1):
    return LabeledBox(box(x, y, w, h), category)


def det(x, y, w, h, category=1, score=0.9):
    return LabeledBox(box(x, y, w, h), category, score)


def image(image_id, sequence="a", frame=None, width=1000, height=1000):
    frame = frame if frame is not None else image_id
    return ImageRecord(
        id=image_id,
        file_name=f"{sequence}_{frame:04d}.jpg",
        width=width,
        height=height,
        sequence_id=sequence,
        frame_index=frame,
    )


def dataset(boxes_by_image, categories=None, sequences=None, width=1000, height=1000):
    """Build a small AnnotationSet from {image_id: [LabeledBox, ...]}."""
    sequences = sequences or {}
    images = [
        image(i, sequences.get(i, "a"), frame=i, width=width, height=height)
        for i in sorted(boxes_by_image)
    ]
    if categories is None:
        cids = sorted(
            {lb.category_id for entries in boxes_by_image.values() for lb in entries}
        ) or [1]
        categories = {c: f"class_{c}" for c in cids}
    return AnnotationSet(
        images=images,
        categories=categories,
        boxes={i: list(v) for i, v in boxes_by_image.items()},
        source_category_ids={c: c for c in categories},
    )


@pytest.fixture
def two_sequence_dataset():
    """Ten frames in sequence a, five in sequence b, one box each."""
    boxes = {}
    sequences = {}
    for i in range(1, 11):
        boxes[i] = [gt(10 * i, 10, 20, 20)]
        sequences[i] = "a"
    for i in range(11, 16):
        boxes[i] = [gt(10 * (i - 10), 50, 20, 20)]
        sequences[i] = "b"
    ds = dataset(boxes, sequences=sequences)
    # frame indices must restart per sequence
    fixed = []
    for im in ds.images:
        frame = im.id - 1 if im.sequence_id == "a" else im.id - 11
        fixed.append(
            ImageRecord(im.id, f"{im.sequence_id}_{frame:04d}.jpg", im.width,
                        im.height, im.sequence_id, frame)
        )
    ds.images = fixed
    ds.validate()
    return ds
