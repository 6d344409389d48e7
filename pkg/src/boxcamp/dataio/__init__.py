from boxcamp.dataio.coco import (
    parse_coco_detections,
    parse_coco_ground_truth,
    write_coco_detections,
    write_coco_ground_truth,
)
from boxcamp.dataio.manifest import CampaignManifest, load_manifest, save_manifest
from boxcamp.dataio.types import (
    AnnotationSet,
    DatasetSummary,
    DetectionSet,
    ImageRecord,
    sequence_from_file_name,
    summarize,
)
from boxcamp.dataio.voc import parse_voc_directory, write_voc_directory

__all__ = [
    "AnnotationSet",
    "CampaignManifest",
    "DatasetSummary",
    "DetectionSet",
    "ImageRecord",
    "load_manifest",
    "parse_coco_detections",
    "parse_coco_ground_truth",
    "parse_voc_directory",
    "save_manifest",
    "sequence_from_file_name",
    "summarize",
    "write_coco_detections",
    "write_coco_ground_truth",
    "write_voc_directory",
]
