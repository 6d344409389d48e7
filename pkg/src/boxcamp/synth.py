"""Deterministic synthetic datasets and detector-like proposal perturbations.

Desk-scale stand-ins for real footage: randomized but seeded, so every
generated campaign is reproducible.
"""

from __future__ import annotations

import random

from boxcamp.dataio.types import AnnotationSet, DetectionSet, ImageRecord
from boxcamp.geometry import BoundingBox, LabeledBox

__all__ = ["synthetic_dataset", "perturb_detections"]


def synthetic_dataset(
    n_images: int,
    n_boxes: int,
    *,
    n_categories: int = 3,
    n_sequences: int = 2,
    width: int = 1280,
    height: int = 720,
    seed: int = 0,
    category_counts=None,
) -> AnnotationSet:
    """A labeled dataset with video-like sequences and random boxes.

    ``category_counts`` pins the exact number of boxes per category
    (overriding ``n_boxes``/``n_categories``); otherwise categories are
    drawn uniformly.
    """
    if category_counts is not None:
        n_categories = len(category_counts)
        n_boxes = sum(category_counts)
    if n_images < 1 or n_sequences < 1 or n_categories < 1:
        raise ValueError("need at least one image, sequence, and category")
    n_sequences = min(n_sequences, n_images)
    rng = random.Random(seed)

    images = []
    frame_counters = [0] * n_sequences
    base = n_images // n_sequences
    extra = n_images % n_sequences
    image_id = 1
    for s in range(n_sequences):
        length = base + (1 if s < extra else 0)
        for _ in range(length):
            frame = frame_counters[s]
            frame_counters[s] += 1
            images.append(
                ImageRecord(
                    id=image_id,
                    file_name=f"seq{s:02d}_{frame:06d}.jpg",
                    width=width,
                    height=height,
                    sequence_id=f"seq{s:02d}",
                    frame_index=frame,
                )
            )
            image_id += 1

    categories = {k: f"class_{k}" for k in range(1, n_categories + 1)}
    if category_counts is not None:
        labels = [
            cid for cid, count in enumerate(category_counts, start=1) for _ in range(count)
        ]
        rng.shuffle(labels)
    else:
        labels = [rng.randint(1, n_categories) for _ in range(n_boxes)]
    boxes: dict[int, list[LabeledBox]] = {im.id: [] for im in images}
    ids = [im.id for im in images]
    for cid in labels:
        target = rng.choice(ids)
        boxes[target].append(LabeledBox(_random_box(rng, width, height), cid))

    out = AnnotationSet(images, categories, boxes, {k: k for k in categories})
    out.validate()
    return out


def _quantize(v: float) -> float:
    # sixteenth-pixel grid keeps coordinates exact in binary, so generated
    # boxes never drift past the image edge by a rounding ulp
    return int(v * 16) / 16


def _random_box(rng: random.Random, width: int, height: int) -> BoundingBox:
    w = _quantize(rng.uniform(8, max(9.0, width / 4)))
    h = _quantize(rng.uniform(8, max(9.0, height / 4)))
    x = _quantize(rng.uniform(0, width - w))
    y = _quantize(rng.uniform(0, height - h))
    return BoundingBox(x, y, w, h)


def perturb_detections(
    gt: AnnotationSet,
    *,
    drop_rate: float = 0.2,
    spurious_rate: float = 0.2,
    jitter: float = 0.15,
    wrong_category_rate: float = 0.0,
    score_low: float = 0.5,
    score_high: float = 1.0,
    seed: int = 0,
    image_ids=None,
) -> DetectionSet:
    """Detector-like proposals derived from ground truth.

    Each true box is dropped with ``drop_rate``, otherwise re-emitted with
    its corners jittered by up to ``jitter`` of its size (which may push
    the overlap below the match threshold) and occasionally relabeled.
    ``spurious_rate`` extra boxes per true box appear at random locations.
    """
    rng = random.Random(seed)
    by_id = gt.image_by_id()
    categories = sorted(gt.categories)
    targets = list(image_ids) if image_ids is not None else [im.id for im in gt.images]

    out: dict[int, list[LabeledBox]] = {}
    for image_id in targets:
        image = by_id[image_id]
        entries = []
        for lb in gt.boxes.get(image_id, []):
            if rng.random() < drop_rate:
                continue
            box = _jittered(rng, lb.box, jitter, image.width, image.height)
            category = lb.category_id
            if wrong_category_rate and rng.random() < wrong_category_rate and len(categories) > 1:
                category = rng.choice([c for c in categories if c != category])
            entries.append(LabeledBox(box, category, rng.uniform(score_low, score_high)))
            if rng.random() < spurious_rate:
                entries.append(
                    LabeledBox(
                        _random_box(rng, image.width, image.height),
                        rng.choice(categories),
                        rng.uniform(score_low, score_high),
                    )
                )
        if entries:
            out[image_id] = entries
    return DetectionSet(out)


def _jittered(
    rng: random.Random, box: BoundingBox, jitter: float, width: int, height: int
) -> BoundingBox:
    if jitter <= 0:
        return box
    dx = rng.uniform(-jitter, jitter) * box.w
    dy = rng.uniform(-jitter, jitter) * box.h
    dw = 1.0 + rng.uniform(-jitter, jitter)
    dh = 1.0 + rng.uniform(-jitter, jitter)
    w = _quantize(max(2.0, box.w * dw))
    h = _quantize(max(2.0, box.h * dh))
    x = _quantize(min(max(0.0, box.x + dx), max(0.0, width - w)))
    y = _quantize(min(max(0.0, box.y + dy), max(0.0, height - h)))
    w = min(w, width - x)
    h = min(h, height - y)
    return BoundingBox(x, y, max(w, 1.0), max(h, 1.0))
