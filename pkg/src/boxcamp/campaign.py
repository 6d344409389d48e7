"""The two-fold annotation campaign state machine.

A campaign walks one way through its stages: fold-1 images are annotated
from scratch, an external detector's proposals are imported for fold 2,
the human corrects them (removing spurious boxes, adding missed ones), and
the folds merge into the final labeled set. Training and prediction happen
outside the toolkit; the engine simply waits for a proposals file.

All mutations funnel through a single writer lock and are logged to an
append-only event log; replaying the log against the same inputs
reconstructs the working state exactly.
"""

from __future__ import annotations

import enum
import threading
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from boxcamp.dataio.types import AnnotationSet, DetectionSet, ImageRecord
from boxcamp.errors import (
    ClampWarning,
    FoldViolationError,
    IncompleteCampaignError,
    LogIntegrityError,
    ReferentialIntegrityError,
    StageError,
    StaleReferenceError,
    ValidationError,
)
from boxcamp.eventlog import OperationEvent
from boxcamp.geometry import BoundingBox, LabeledBox
from boxcamp.matching import MatchConfig, match_image
from boxcamp.splits import SplitPoint, split
from boxcamp.workload import TimingModel, WorkloadEstimate

__all__ = [
    "Stage",
    "WorkingBox",
    "ProgressReport",
    "Campaign",
    "init_campaign",
    "simulate_annotator",
    "replay_campaign",
]


class Stage(enum.Enum):
    INITIALIZED = "initialized"
    FOLD1_ANNOTATION = "fold1_annotation"
    AWAITING_PROPOSALS = "awaiting_proposals"
    FOLD2_CORRECTION = "fold2_correction"
    FINALIZED = "finalized"


_STAGE_ORDER = list(Stage)


@dataclass(frozen=True)
class WorkingBox:
    ref: int
    box: BoundingBox
    category_id: int
    source: str  # "proposal" | "manual"
    score: float | None = None


@dataclass
class _ImageWorking:
    boxes: dict[int, WorkingBox] = field(default_factory=dict)
    next_ref: int = 0

    def clone(self) -> "_ImageWorking":
        return _ImageWorking(dict(self.boxes), self.next_ref)


@dataclass(frozen=True)
class ProgressReport:
    stage: Stage
    images_done: int
    images_pending: int
    operations: dict[str, int]
    estimate: WorkloadEstimate
    running_precision: float | None
    running_recall: float | None
    projected_remaining_s: float | None


class Campaign:
    """Single-writer campaign state; use :func:`init_campaign` to create one."""

    def __init__(
        self,
        dataset: AnnotationSet,
        fraction: float,
        cfg: MatchConfig | None = None,
        timing: TimingModel | None = None,
        prelabeled: AnnotationSet | None = None,
        log_path=None,
    ):
        if not dataset.images:
            raise ValidationError("cannot start a campaign on an empty dataset")
        if not 0.0 < fraction <= 1.0:
            raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
        self.cfg = cfg or MatchConfig()
        self.timing = timing or TimingModel()
        self.images: dict[int, ImageRecord] = {im.id: im for im in dataset.images}
        self.image_order: list[int] = [im.id for im in dataset.images]
        self.categories: dict[int, str] = dict(dataset.categories)
        self.source_category_ids: dict[int, int] = dict(dataset.source_category_ids)
        self.split: SplitPoint = split(dataset, fraction)
        self.fold_of: dict[int, int] = {i: 1 for i in self.split.fold1_image_ids}
        self.fold_of.update({i: 2 for i in self.split.fold2_image_ids})
        self._working: dict[int, _ImageWorking] = {i: _ImageWorking() for i in self.images}
        self._proposal_counts: dict[int, int] = {}
        self._status: dict[int, str] = {i: "pending" for i in self.images}
        self._log: list[OperationEvent] = []
        self._log_path = log_path
        self._session_ts: dict[str, int] = {}
        self._lock = threading.RLock()
        self._final_set: AnnotationSet | None = None

        if prelabeled is None:
            self.stage = Stage.FOLD1_ANNOTATION
        else:
            self._seed_fold1(prelabeled)
            self.stage = Stage.AWAITING_PROPOSALS

    # -- construction helpers ------------------------------------------

    def _seed_fold1(self, prelabeled: AnnotationSet) -> None:
        fold1 = set(self.split.fold1_image_ids)
        for image_id, entries in prelabeled.boxes.items():
            if not entries:
                continue
            if image_id not in self.images:
                raise ReferentialIntegrityError(
                    f"prelabeled boxes for unknown image {image_id}", [image_id]
                )
            if image_id not in fold1:
                raise FoldViolationError(
                    f"prelabeled boxes for image {image_id}, which is in fold 2"
                )
            working = self._working[image_id]
            for lb in entries:
                ref = working.next_ref
                working.boxes[ref] = WorkingBox(ref, lb.box, lb.category_id, "manual")
                working.next_ref = ref + 1
        for image_id in fold1:
            self._status[image_id] = "done"

    # -- internal validation -------------------------------------------

    def _require_stage(self, *allowed: Stage) -> None:
        if self.stage not in allowed:
            raise StageError(
                f"operation requires stage {'/'.join(s.value for s in allowed)}, "
                f"campaign is in {self.stage.value}"
            )

    def _advance(self, target: Stage) -> None:
        if _STAGE_ORDER.index(target) != _STAGE_ORDER.index(self.stage) + 1:
            raise StageError(f"illegal transition {self.stage.value} -> {target.value}")
        self.stage = target

    def _bounded_box(self, box: BoundingBox, image: ImageRecord, where: str) -> BoundingBox:
        x1, y1 = max(box.x, 0.0), max(box.y, 0.0)
        x2 = min(box.x2, float(image.width))
        y2 = min(box.y2, float(image.height))
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            raise ValidationError(f"{where}: box {box.as_xywh()} lies outside image {image.id}")
        if (x1, y1, x2, y2) == (box.x, box.y, box.x2, box.y2):
            return box
        warnings.warn(
            f"{where}: box {box.as_xywh()} clamped to image {image.id}",
            ClampWarning,
            stacklevel=4,
        )
        return BoundingBox(x1, y1, x2 - x1, y2 - y1)

    # -- the six-step workflow ------------------------------------------

    def import_proposals(self, detections: DetectionSet, cfg: MatchConfig | None = None) -> None:
        """Load detector output for fold 2 and open the correction stage.

        Only proposals at or above the operating score threshold become
        working boxes; the rest were never meant to be shown to the human.
        """
        cfg = cfg or self.cfg
        with self._lock:
            self._require_stage(Stage.AWAITING_PROPOSALS)
            fold1 = set(self.split.fold1_image_ids)
            unknown = sorted(set(detections.boxes) - set(self.images))
            if unknown:
                raise ReferentialIntegrityError(
                    f"proposals reference unknown image ids: {unknown}", unknown
                )
            violating = sorted(set(detections.boxes) & fold1)
            if violating:
                raise FoldViolationError(
                    f"proposals supplied for fold-1 images: {violating}"
                )
            staged: dict[int, list[WorkingBox]] = {}
            for image_id, entries in detections.boxes.items():
                image = self.images[image_id]
                kept = []
                for lb in entries:
                    if lb.score is None:
                        raise ValidationError(f"image {image_id}: proposal without a score")
                    if lb.score < cfg.score_threshold:
                        continue
                    if lb.category_id not in self.categories:
                        raise ReferentialIntegrityError(
                            f"image {image_id}: unknown category {lb.category_id}",
                            [lb.category_id],
                        )
                    box = self._bounded_box(lb.box, image, f"image {image_id}")
                    kept.append((box, lb.category_id, lb.score))
                staged[image_id] = kept

            for image_id in self.split.fold2_image_ids:
                working = self._working[image_id]
                for box, category_id, score in staged.get(image_id, []):
                    ref = working.next_ref
                    working.boxes[ref] = WorkingBox(ref, box, category_id, "proposal", score)
                    working.next_ref = ref + 1
                self._proposal_counts[image_id] = len(working.boxes)
            self._advance(Stage.FOLD2_CORRECTION)

    def apply_operations(self, events: Sequence[OperationEvent]) -> None:
        """Apply a batch of human operations; all-or-nothing.

        The batch is applied against copies of the touched images and only
        committed (and logged) when every event validates, so a failing
        batch leaves the campaign untouched.
        """
        events = list(events)
        with self._lock:
            touched = {ev.image_id for ev in events}
            saved_working = {i: self._working[i].clone() for i in touched if i in self._working}
            saved_status = dict(self._status)
            saved_stage = self.stage
            saved_sessions = dict(self._session_ts)
            saved_counts = dict(self._proposal_counts)
            try:
                for ev in events:
                    self._apply_one(ev)
            except Exception:
                for i, w in saved_working.items():
                    self._working[i] = w
                self._status = saved_status
                self.stage = saved_stage
                self._session_ts = saved_sessions
                self._proposal_counts = saved_counts
                raise
            self._log.extend(events)
            if self._log_path is not None:
                from boxcamp.eventlog import append_line

                for ev in events:
                    append_line(self._log_path, ev)

    def _apply_one(self, ev: OperationEvent) -> None:
        if ev.image_id not in self.images:
            raise ReferentialIntegrityError(f"unknown image id {ev.image_id}", [ev.image_id])
        fold = self.fold_of[ev.image_id]
        if ev.stage_tag != f"fold{fold}":
            raise FoldViolationError(
                f"event tagged {ev.stage_tag} targets image {ev.image_id} in fold {fold}"
            )
        if fold == 1:
            self._require_stage(Stage.FOLD1_ANNOTATION)
            if ev.kind == "remove":
                raise StageError("fold-1 annotation is add-only; removes are not allowed")
        else:
            self._require_stage(Stage.FOLD2_CORRECTION)
        if self._status[ev.image_id] == "done":
            raise StageError(f"image {ev.image_id} is already done")

        prev = self._session_ts.get(ev.session_id)
        if prev is not None and ev.ts_ms < prev:
            raise LogIntegrityError(
                f"session {ev.session_id!r}: timestamp {ev.ts_ms} before {prev}"
            )
        self._session_ts[ev.session_id] = ev.ts_ms

        working = self._working[ev.image_id]
        if ev.kind == "add":
            if ev.category_id not in self.categories:
                raise ReferentialIntegrityError(
                    f"add with unknown category {ev.category_id}", [ev.category_id]
                )
            box = self._bounded_box(ev.box, self.images[ev.image_id], f"image {ev.image_id}")
            ref = working.next_ref
            working.boxes[ref] = WorkingBox(ref, box, ev.category_id, "manual")
            working.next_ref = ref + 1
        elif ev.kind == "remove":
            if ev.target_ref not in working.boxes:
                raise StaleReferenceError(
                    f"image {ev.image_id}: no working box with ref {ev.target_ref}"
                )
            del working.boxes[ev.target_ref]
        else:  # accept_all
            self._status[ev.image_id] = "done"
            if self.stage is Stage.FOLD1_ANNOTATION and all(
                self._status[i] == "done" for i in self.split.fold1_image_ids
            ):
                self._advance(Stage.AWAITING_PROPOSALS)

    def finalize(self) -> AnnotationSet:
        """Merge the two folds into the final labeled set.

        Idempotent: a finalized campaign returns the same set again.
        """
        with self._lock:
            if self.stage is Stage.FINALIZED:
                return self._final_set
            self._require_stage(Stage.FOLD2_CORRECTION)
            pending = [i for i in self.image_order if self._status[i] == "pending"]
            if pending:
                raise IncompleteCampaignError(
                    f"{len(pending)} images still pending: {pending[:10]}", pending
                )
            final = self.working_annotation_set()
            self._advance(Stage.FINALIZED)
            self._final_set = final
            return final

    # -- read side -------------------------------------------------------

    def working_annotation_set(self) -> AnnotationSet:
        """Current working boxes of every image as a ground-truth set."""
        with self._lock:
            boxes = {
                image_id: [
                    LabeledBox(wb.box, wb.category_id)
                    for wb in self._working[image_id].boxes.values()
                ]
                for image_id in self.image_order
            }
            return AnnotationSet(
                images=[self.images[i] for i in self.image_order],
                categories=dict(self.categories),
                boxes=boxes,
                source_category_ids=dict(self.source_category_ids),
            )

    def working_boxes(self, image_id: int) -> list[WorkingBox]:
        with self._lock:
            if image_id not in self.images:
                raise ReferentialIntegrityError(f"unknown image id {image_id}", [image_id])
            return list(self._working[image_id].boxes.values())

    def next_ref(self, image_id: int) -> int:
        with self._lock:
            return self._working[image_id].next_ref

    def status(self, image_id: int) -> str:
        with self._lock:
            return self._status[image_id]

    def log_events(self) -> list[OperationEvent]:
        with self._lock:
            return list(self._log)

    def attach_log(self, path) -> None:
        """Start appending future events to ``path`` (used after a replay)."""
        with self._lock:
            self._log_path = path

    def image_ids(self, fold: int | None = None, status: str | None = None) -> list[int]:
        with self._lock:
            out = []
            for i in self.image_order:
                if fold is not None and self.fold_of[i] != fold:
                    continue
                if status is not None and self._status[i] != status:
                    continue
                out.append(i)
            return out

    def stats(self, timing: TimingModel | None = None) -> ProgressReport:
        """Operations so far plus a projection of the remaining correction time.

        The projection extrapolates the running correction rates observed on
        completed fold-2 images over the proposals still pending.
        """
        timing = timing or self.timing
        with self._lock:
            ops = {"add": 0, "remove": 0, "accept_all": 0}
            fold1_adds = fold2_adds = fold2_removes = 0
            done_corrections: dict[int, int] = {}
            for ev in self._log:
                ops[ev.kind] += 1
                if ev.kind == "add" and ev.stage_tag == "fold1":
                    fold1_adds += 1
                elif ev.stage_tag == "fold2" and ev.kind in ("add", "remove"):
                    if ev.kind == "add":
                        fold2_adds += 1
                    else:
                        fold2_removes += 1
                    done_corrections[ev.image_id] = done_corrections.get(ev.image_id, 0) + 1

            done = sum(1 for s in self._status.values() if s == "done")
            pending = len(self._status) - done
            est = WorkloadEstimate(
                initial=float(fold1_adds),
                additions=float(fold2_adds),
                removals=float(fold2_removes),
                timing=timing,
            )

            running_precision = running_recall = projected = None
            if self.stage is Stage.FOLD2_CORRECTION:
                done2 = {i for i in self.split.fold2_image_ids if self._status[i] == "done"}
                pend2 = [i for i in self.split.fold2_image_ids if self._status[i] == "pending"]
                prop_done = sum(self._proposal_counts.get(i, 0) for i in done2)
                prop_pend = sum(self._proposal_counts.get(i, 0) for i in pend2)
                removed_done = sum(
                    1 for ev in self._log
                    if ev.kind == "remove" and ev.image_id in done2
                )
                added_done = sum(
                    1 for ev in self._log
                    if ev.kind == "add" and ev.stage_tag == "fold2" and ev.image_id in done2
                )
                if prop_done > 0:
                    kept = prop_done - removed_done
                    objects_done = kept + added_done
                    running_precision = kept / prop_done
                    running_recall = kept / objects_done if objects_done > 0 else None
                    expected_objects = prop_pend * objects_done / prop_done
                    expected_additions = (
                        expected_objects * (1.0 - running_recall)
                        if running_recall is not None
                        else 0.0
                    )
                    expected_removals = prop_pend * (1.0 - running_precision)
                    projected = timing.t2 * (expected_additions + expected_removals)
                elif done2:
                    per_image = sum(done_corrections.values()) / len(done2)
                    projected = timing.t2 * per_image * len(pend2)

            return ProgressReport(
                stage=self.stage,
                images_done=done,
                images_pending=pending,
                operations=ops,
                estimate=est,
                running_precision=running_precision,
                running_recall=running_recall,
                projected_remaining_s=projected,
            )


def init_campaign(
    dataset: AnnotationSet,
    fraction: float,
    cfg: MatchConfig | None = None,
    timing: TimingModel | None = None,
    prelabeled: AnnotationSet | None = None,
    log_path=None,
) -> Campaign:
    """Start a campaign: split the dataset and open the first manual stage.

    ``dataset`` supplies images/categories only; any boxes it carries are
    ignored. Pass fold-1 labels as ``prelabeled`` to skip the manual stage
    and wait for proposals directly.
    """
    return Campaign(dataset, fraction, cfg, timing, prelabeled, log_path)


def simulate_annotator(
    gt_fold2: AnnotationSet,
    working: Mapping[int, Sequence[WorkingBox]],
    cfg: MatchConfig | None = None,
    *,
    session_id: str = "sim",
    start_ts_ms: int = 0,
    step_ms: int = 1000,
    include_accepts: bool = False,
) -> list[OperationEvent]:
    """The ideal correction session for known ground truth.

    Per image, proposals are matched against ground truth; every unmatched
    proposal costs one remove, every unmatched ground-truth box one add
    (a mislocated proposal therefore costs two operations), and matched
    proposals cost nothing and are kept as-is. Removals come before
    additions, both in index order. Perfect proposals produce an empty log;
    pass ``include_accepts=True`` to also mark every image done.
    """
    cfg = cfg or MatchConfig()
    gt_images = {im.id for im in gt_fold2.images}
    missing = sorted(set(working) - gt_images)
    if missing:
        raise ReferentialIntegrityError(
            f"ground truth missing for images: {missing}", missing
        )

    events: list[OperationEvent] = []
    ts = start_ts_ms
    for image_id in sorted(working):
        boxes = list(working[image_id])
        gt = gt_fold2.boxes.get(image_id, [])
        det = [
            LabeledBox(wb.box, wb.category_id, wb.score if wb.score is not None else 1.0)
            for wb in boxes
        ]
        result = match_image(gt, det, cfg)
        for det_idx in result.false_positives:
            ts += step_ms
            events.append(
                OperationEvent(
                    ts_ms=ts,
                    session_id=session_id,
                    image_id=image_id,
                    kind="remove",
                    stage_tag="fold2",
                    target_ref=boxes[det_idx].ref,
                )
            )
        for gt_idx in result.false_negatives:
            ts += step_ms
            lb = gt[gt_idx]
            events.append(
                OperationEvent(
                    ts_ms=ts,
                    session_id=session_id,
                    image_id=image_id,
                    kind="add",
                    stage_tag="fold2",
                    box=lb.box,
                    category_id=lb.category_id,
                )
            )
        if include_accepts:
            ts += step_ms
            events.append(
                OperationEvent(
                    ts_ms=ts,
                    session_id=session_id,
                    image_id=image_id,
                    kind="accept_all",
                    stage_tag="fold2",
                )
            )
    return events


def replay_campaign(
    dataset: AnnotationSet,
    fraction: float,
    events: Iterable[OperationEvent],
    cfg: MatchConfig | None = None,
    timing: TimingModel | None = None,
    proposals: DetectionSet | None = None,
    prelabeled: AnnotationSet | None = None,
) -> Campaign:
    """Rebuild a campaign from its inputs and event log.

    Proposals are imported at the point the log crosses from fold-1 to
    fold-2 operations (or immediately when fold 1 was prelabeled), exactly
    as the original run did.
    """
    campaign = Campaign(dataset, fraction, cfg, timing, prelabeled)
    for ev in events:
        if campaign.stage is Stage.AWAITING_PROPOSALS:
            campaign.import_proposals(proposals or DetectionSet({}))
        campaign.apply_operations([ev])
    if campaign.stage is Stage.AWAITING_PROPOSALS and proposals is not None:
        campaign.import_proposals(proposals)
    return campaign
