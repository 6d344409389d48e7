"""Command-line interface.

Subcommands: init, split, summarize, import-detections, evaluate, estimate,
sweep, simulate, serve, export. Config precedence everywhere: explicit flags
beat the campaign manifest, which beats built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from boxcamp.campaign import Campaign, replay_campaign, simulate_annotator
from boxcamp.dataio import (
    AnnotationSet,
    CampaignManifest,
    DetectionSet,
    load_manifest,
    parse_coco_detections,
    parse_coco_ground_truth,
    parse_voc_directory,
    save_manifest,
    summarize,
    write_coco_ground_truth,
    write_voc_directory,
)
from boxcamp.dataio.manifest import LOG_NAME, MANIFEST_NAME
from boxcamp.errors import BoxcampError
from boxcamp.eventlog import read_log, write_log
from boxcamp.geometry import LabeledBox
from boxcamp.evaluation import evaluate
from boxcamp.matching import MatchConfig, match_image, report
from boxcamp.splits import (
    load_quality_curve,
    load_workload_curve_csv,
    optimum,
    saturating_quality,
    split,
    sweep,
    write_workload_curve_csv,
)
from boxcamp.workload import TimingModel, estimate, savings_vs_manual

PLAN_NAME = "plan.json"


def _load_dataset(path: str | Path, fmt: str) -> AnnotationSet:
    path = Path(path)
    if fmt == "voc":
        return parse_voc_directory(path)
    return parse_coco_ground_truth(path.read_bytes())


def _resolve(path: str, base: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def _relative_to_campaign(path: str, base: Path) -> str:
    # manifest paths resolve against the campaign dir, so store them that way
    import os

    return os.path.relpath(Path(path).resolve(), base.resolve())


def _manifest_config(manifest: CampaignManifest) -> tuple[MatchConfig, TimingModel]:
    cfg = MatchConfig(
        iou_threshold=manifest.iou_threshold,
        score_threshold=manifest.score_threshold,
        class_aware=manifest.class_aware,
    )
    timing = TimingModel(
        t1=manifest.t1_seconds,
        t2=manifest.t2_seconds,
        idle_cutoff=manifest.idle_cutoff_seconds,
    )
    return cfg, timing


def load_campaign(campaign_dir: str | Path) -> tuple[Campaign, CampaignManifest]:
    """Rebuild a campaign from its directory (manifest + event log)."""
    base = Path(campaign_dir)
    manifest = load_manifest(base / MANIFEST_NAME)
    cfg, timing = _manifest_config(manifest)
    dataset = _load_dataset(_resolve(manifest.dataset_path, base), manifest.dataset_format)
    prelabeled = None
    if manifest.prelabeled_path:
        prelabeled = parse_coco_ground_truth(
            _resolve(manifest.prelabeled_path, base).read_bytes()
        )
    proposals = None
    if manifest.detections_path:
        proposals = parse_coco_detections(
            _resolve(manifest.detections_path, base).read_bytes(), categories=dataset
        )
    log_path = base / manifest.log_path
    events = list(read_log(log_path)) if log_path.exists() else []
    campaign = replay_campaign(
        dataset, manifest.fraction, events, cfg, timing, proposals, prelabeled
    )
    campaign.attach_log(log_path)
    return campaign, manifest


def _fmtnum(v: float) -> str:
    # display-time rounding only; stored/exported values stay exact
    return str(int(v)) if float(v).is_integer() else f"{float(v):.10g}"


def _cmd_init(args) -> int:
    base = Path(args.campaign)
    base.mkdir(parents=True, exist_ok=True)
    manifest = CampaignManifest(
        dataset_path=_relative_to_campaign(args.dataset, base),
        dataset_format=args.format,
        fraction=args.fraction,
        iou_threshold=args.iou_threshold,
        score_threshold=args.score_threshold,
        t1_seconds=args.t1,
        t2_seconds=args.t2,
        prelabeled_path=(
            _relative_to_campaign(args.prelabeled, base) if args.prelabeled else None
        ),
    )
    dataset = _load_dataset(_resolve(manifest.dataset_path, base), manifest.dataset_format)
    sp = split(dataset, manifest.fraction)
    save_manifest(manifest, base / MANIFEST_NAME)
    (base / LOG_NAME).touch()
    print(f"campaign initialized at {base}")
    print(f"fold1 {len(sp.fold1_image_ids)} images, fold2 {len(sp.fold2_image_ids)} images")
    return 0


def _cmd_split(args) -> int:
    dataset = _load_dataset(args.dataset, args.format)
    sp = split(dataset, args.fraction)
    print(f"fraction {_fmtnum(args.fraction)}")
    print(f"fold1 {len(sp.fold1_image_ids)} images")
    print(f"fold2 {len(sp.fold2_image_ids)} images")
    if args.out:
        doc = {
            "fraction": sp.fraction,
            "fold1_image_ids": list(sp.fold1_image_ids),
            "fold2_image_ids": list(sp.fold2_image_ids),
        }
        Path(args.out).write_bytes(json.dumps(doc, indent=2).encode("utf-8") + b"\n")
    return 0


def _cmd_summarize(args) -> int:
    dataset = _load_dataset(args.dataset, args.format)
    s = summarize(dataset)
    if args.json:
        print(
            json.dumps(
                {
                    "image_count": s.image_count,
                    "instance_count": s.instance_count,
                    "category_count": s.category_count,
                    "per_category_counts": {
                        str(k): v for k, v in sorted(s.per_category_counts.items())
                    },
                },
                indent=2,
            )
        )
        return 0
    print(f"images {s.image_count}")
    print(f"instances {s.instance_count}")
    print(f"categories {s.category_count}")
    for cid in sorted(s.per_category_counts):
        name = dataset.categories.get(cid, "?")
        print(f"  {cid} {name}: {s.per_category_counts[cid]}")
    return 0


def _cmd_import_detections(args) -> int:
    campaign, manifest = load_campaign(args.campaign)
    base = Path(args.campaign)
    dataset = _load_dataset(_resolve(manifest.dataset_path, base), manifest.dataset_format)
    det = parse_coco_detections(Path(args.detections).read_bytes(), categories=dataset)
    campaign.import_proposals(det)
    manifest.detections_path = _relative_to_campaign(args.detections, base)
    save_manifest(manifest, base / MANIFEST_NAME)
    count = sum(len(campaign.working_boxes(i)) for i in campaign.split.fold2_image_ids)
    print(f"imported {count} proposals at score >= {_fmtnum(campaign.cfg.score_threshold)}")
    print(f"stage {campaign.stage.value}")
    return 0


def _cmd_evaluate(args) -> int:
    gt = _load_dataset(args.gt, args.format)
    det = parse_coco_detections(Path(args.detections).read_bytes(), categories=gt)
    cfg = MatchConfig(iou_threshold=args.iou_threshold, score_threshold=args.score_threshold)
    rep = evaluate(gt, det, cfg)
    for cid in sorted(rep.per_category_ap):
        print(f"ap {cid} {rep.per_category_ap[cid]!r}")
    print(f"map {rep.map_value!r}")
    if args.out:
        Path(args.out).write_bytes(rep.to_json(cfg))
    if args.csv:
        Path(args.csv).write_bytes(rep.to_csv())
    return 0


def _cmd_estimate(args) -> int:
    timing = TimingModel(t1=args.t1, t2=args.t2)
    est = estimate(
        args.initial,
        args.fold2_objects,
        args.fold2_detections,
        args.precision,
        args.recall,
        timing,
    )
    if args.json:
        sys.stdout.write(est.to_json().decode("utf-8"))
    else:
        print(f"initial {_fmtnum(est.initial)}")
        print(f"additions {_fmtnum(est.additions)}")
        print(f"removals {_fmtnum(est.removals)}")
        print(f"total_operations {_fmtnum(est.total_operations)}")
        print(f"total_time_s {_fmtnum(est.total_time_s)}")
    if args.total_objects:
        print(f"savings_vs_manual {savings_vs_manual(est, args.total_objects, timing)!r}")
    return 0


def _cmd_sweep(args) -> int:
    timing = TimingModel(t1=args.t1, t2=args.t2)
    if args.workload_curve:
        curve = load_workload_curve_csv(args.workload_curve, timing)
    else:
        if args.quality:
            quality = load_quality_curve(args.quality)
        else:
            quality = saturating_quality(args.saturating_kappa)
        dataset = _load_dataset(args.dataset, args.format)
        fractions = [p.fraction for p in quality.points]
        curve = sweep(dataset, quality, timing, fractions=fractions)
    best = optimum(curve, args.objective)
    print(f"optimum {args.objective} {_fmtnum(best)}")
    if args.out:
        Path(args.out).write_bytes(write_workload_curve_csv(curve))
    plan_target = None
    if args.plan:
        plan_target = Path(args.plan)
    elif args.campaign:
        plan_target = Path(args.campaign) / PLAN_NAME
    if plan_target:
        doc = {
            "objective": args.objective,
            "optimum": best,
            "optimum_operations": optimum(curve, "operations"),
            "optimum_time": optimum(curve, "time"),
            "timing": {"t1": timing.t1, "t2": timing.t2},
            "points": [
                {
                    "fraction": f,
                    "initial": est.initial,
                    "additions": est.additions,
                    "removals": est.removals,
                    "total_operations": est.total_operations,
                    "total_time_s": est.total_time_s,
                }
                for f, est in curve.points
            ],
        }
        plan_target.write_bytes(json.dumps(doc, indent=2).encode("utf-8") + b"\n")
    return 0


def _cmd_simulate(args) -> int:
    gt = _load_dataset(args.gt, args.format)
    det = parse_coco_detections(Path(args.detections).read_bytes(), categories=gt)
    cfg = MatchConfig(iou_threshold=args.iou_threshold, score_threshold=args.score_threshold)
    timing = TimingModel(t1=args.t1, t2=args.t2)

    sp = split(gt, args.fraction)
    fold1 = set(sp.fold1_image_ids)
    prelabeled = AnnotationSet(
        images=list(gt.images),
        categories=dict(gt.categories),
        boxes={i: (list(gt.boxes[i]) if i in fold1 else []) for i in gt.boxes},
        source_category_ids=dict(gt.source_category_ids),
    )
    campaign = Campaign(gt, args.fraction, cfg, timing, prelabeled=prelabeled)

    fold2 = set(sp.fold2_image_ids)
    ignored = sum(len(v) for i, v in det.boxes.items() if i not in fold2)
    if ignored:
        print(f"ignoring {ignored} detections outside fold 2", file=sys.stderr)
    campaign.import_proposals(
        DetectionSet({i: v for i, v in det.boxes.items() if i in fold2})
    )

    working = {i: campaign.working_boxes(i) for i in sp.fold2_image_ids}
    results = [
        match_image(
            gt.boxes.get(i, []),
            [LabeledBox(wb.box, wb.category_id, wb.score or 1.0) for wb in working[i]],
            cfg,
        )
        for i in sp.fold2_image_ids
    ]
    measured = report(results)

    events = simulate_annotator(gt, working, cfg, include_accepts=True)
    campaign.apply_operations(events)
    final = campaign.finalize()

    initial = sum(len(gt.boxes.get(i, [])) for i in sp.fold1_image_ids)
    adds = sum(1 for ev in events if ev.kind == "add")
    removes = sum(1 for ev in events if ev.kind == "remove")
    detections_count = sum(len(v) for v in working.values())
    objects_count = sum(len(gt.boxes.get(i, [])) for i in sp.fold2_image_ids)
    est = estimate(
        initial, objects_count, detections_count, measured.precision, measured.recall, timing
    )
    print(f"fold1_boxes {initial}")
    print(f"fold2_objects {objects_count}")
    print(f"fold2_proposals {detections_count}")
    print(f"precision {measured.precision!r}")
    print(f"recall {measured.recall!r}")
    print(f"simulated_adds {adds}")
    print(f"simulated_removes {removes}")
    print(f"total_operations {_fmtnum(initial + adds + removes)}")
    print(f"total_time_s {_fmtnum(est.total_time_s)}")
    print(f"final_boxes {final.total_boxes()}")
    if args.log:
        write_log(events, args.log)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from boxcamp.server import create_app

    campaign, _ = load_campaign(args.campaign)
    base = Path(args.campaign)
    ui_dir = Path(args.ui_dir) if args.ui_dir else base / "ui"
    app = create_app(
        campaign,
        plan_path=base / PLAN_NAME,
        ui_dir=ui_dir if ui_dir.is_dir() else None,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_export(args) -> int:
    base = Path(args.campaign)
    if args.export_format == "csv-curve":
        plan_path = base / PLAN_NAME
        if not plan_path.exists():
            print(f"error: no sweep plan at {plan_path}", file=sys.stderr)
            return 1
        doc = json.loads(plan_path.read_text(encoding="utf-8"))
        from boxcamp.splits import WorkloadCurve
        from boxcamp.workload import WorkloadEstimate

        timing = TimingModel(t1=doc["timing"]["t1"], t2=doc["timing"]["t2"])
        curve = WorkloadCurve(
            tuple(
                (
                    p["fraction"],
                    WorkloadEstimate(
                        initial=p["initial"],
                        additions=p["additions"],
                        removals=p["removals"],
                        timing=timing,
                    ),
                )
                for p in doc["points"]
            )
        )
        Path(args.out).write_bytes(write_workload_curve_csv(curve))
        return 0

    campaign, _ = load_campaign(args.campaign)
    working = campaign.working_annotation_set()
    if args.export_format == "coco":
        Path(args.out).write_bytes(write_coco_ground_truth(working))
    else:
        write_voc_directory(working, args.out)
    print(f"exported {working.total_boxes()} boxes to {args.out}")
    return 0


def _add_dataset_args(p, name="--dataset"):
    p.add_argument(name, required=True, help="dataset path (COCO JSON file or VOC directory)")
    p.add_argument("--format", choices=("coco", "voc"), default="coco")


def _add_threshold_args(p):
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--score-threshold", type=float, default=0.5)


def _add_timing_args(p):
    p.add_argument("--t1", type=float, default=10.15, help="seconds per from-scratch box")
    p.add_argument("--t2", type=float, default=5.20, help="seconds per correction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxcamp")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a campaign directory")
    _add_dataset_args(p)
    p.add_argument("--campaign", required=True)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--prelabeled", help="COCO file with existing fold-1 labels")
    _add_threshold_args(p)
    _add_timing_args(p)
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("split", help="split a dataset at a fraction")
    _add_dataset_args(p)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--out", help="write fold id lists as JSON")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("summarize", help="dataset statistics")
    _add_dataset_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("import-detections", help="import proposals into a campaign")
    p.add_argument("--campaign", required=True)
    p.add_argument("--detections", required=True)
    p.set_defaults(func=_cmd_import_detections)

    p = sub.add_parser("evaluate", help="AP/mAP of detections against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--format", choices=("coco", "voc"), default="coco")
    p.add_argument("--detections", required=True)
    _add_threshold_args(p)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write the per-category CSV here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("estimate", help="closed-form workload estimate")
    p.add_argument("--initial", type=float, required=True)
    p.add_argument("--fold2-objects", type=float, default=0.0)
    p.add_argument("--fold2-detections", type=float, default=0.0)
    p.add_argument("--precision", type=float, default=1.0)
    p.add_argument("--recall", type=float, default=1.0)
    p.add_argument("--total-objects", type=float, help="also print savings vs annotating this many boxes manually")
    _add_timing_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sweep", help="workload across split fractions and the optimum")
    p.add_argument("--dataset", help="dataset path (needed unless --workload-curve)")
    p.add_argument("--format", choices=("coco", "voc"), default="coco")
    p.add_argument("--quality", help="measured quality curve (JSON or CSV)")
    p.add_argument("--saturating-kappa", type=float, default=0.03,
                   help="use the parametric quality model with this kappa")
    p.add_argument("--workload-curve", help="pre-computed workload CSV (skip the sweep)")
    p.add_argument("--objective", choices=("operations", "time"), default="operations")
    p.add_argument("--out", help="write the workload curve CSV here")
    p.add_argument("--plan", help="write the plan JSON here")
    p.add_argument("--campaign", help="campaign directory to store the plan in")
    _add_timing_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="run the ideal correction session on known ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--format", choices=("coco", "voc"), default="coco")
    p.add_argument("--detections", required=True)
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--log", help="write the simulated event log here")
    _add_threshold_args(p)
    _add_timing_args(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="serve the campaign over HTTP")
    p.add_argument("--campaign", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--ui-dir", help="static UI assets (defaults to <campaign>/ui)")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("export", help="export campaign annotations or the plan curve")
    p.add_argument("--campaign", required=True)
    p.add_argument("--export-format", "--to", dest="export_format",
                   choices=("coco", "voc", "csv-curve"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and not (args.workload_curve or args.dataset):
        parser.error("sweep needs --dataset (with --quality/--saturating-kappa) or --workload-curve")
    try:
        return args.func(args)
    except BoxcampError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
