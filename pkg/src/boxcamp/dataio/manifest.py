"""Campaign manifest: the JSON config file a campaign directory is built from."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

from boxcamp.errors import ParseError, ValidationError

MANIFEST_NAME = "manifest.json"
LOG_NAME = "events.jsonl"


@dataclass
class CampaignManifest:
    dataset_path: str
    dataset_format: str = "coco"  # coco | voc
    fraction: float = 0.05
    iou_threshold: float = 0.5
    score_threshold: float = 0.5
    class_aware: bool = True
    t1_seconds: float = 10.15
    t2_seconds: float = 5.20
    idle_cutoff_seconds: float = 60.0
    log_path: str = LOG_NAME
    detections_path: str | None = None
    prelabeled_path: str | None = None

    def __post_init__(self):
        if self.dataset_format not in ("coco", "voc"):
            raise ValidationError(f"unknown dataset format {self.dataset_format!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValidationError(f"fraction must lie in (0, 1], got {self.fraction}")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValidationError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValidationError(f"score_threshold must lie in [0, 1], got {self.score_threshold}")
        if self.t1_seconds <= 0 or self.t2_seconds <= 0 or self.idle_cutoff_seconds <= 0:
            raise ValidationError("timing parameters must be positive")

    def to_json(self) -> bytes:
        return json.dumps(asdict(self), indent=2).encode("utf-8") + b"\n"

    @classmethod
    def from_json(cls, document: bytes | str) -> "CampaignManifest":
        if isinstance(document, bytes):
            document = document.decode("utf-8")
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"manifest: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ParseError("manifest: expected a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            warnings.warn(f"manifest: ignoring unknown keys {sorted(unknown)}", stacklevel=2)
        if "dataset_path" not in raw:
            raise ParseError("manifest: missing dataset_path")
        return cls(**{k: v for k, v in raw.items() if k in known})


def load_manifest(path: str | Path) -> CampaignManifest:
    return CampaignManifest.from_json(Path(path).read_bytes())


def save_manifest(manifest: CampaignManifest, path: str | Path) -> None:
    Path(path).write_bytes(manifest.to_json())
