"""Local HTTP service exposing one campaign to the annotation UI and scripts.

All responses share the envelope {ok, data | error{code, message}}. Mutating
requests carry a client-supplied request_id and are idempotent under retry:
a replayed id returns the recorded response without touching the campaign.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from boxcamp.campaign import Campaign
from boxcamp.errors import (
    BoxcampError,
    FoldViolationError,
    LogIntegrityError,
    ReferentialIntegrityError,
    StageError,
    StaleReferenceError,
    ValidationError,
)
from boxcamp.eventlog import OperationEvent
from boxcamp.geometry import BoundingBox

__all__ = ["create_app"]


def _ok(data, status_code: int = 200) -> JSONResponse:
    return JSONResponse({"ok": True, "data": data}, status_code=status_code)


def _err(code: str, message: str, status_code: int) -> JSONResponse:
    return JSONResponse(
        {"ok": False, "error": {"code": code, "message": message}},
        status_code=status_code,
    )


_ERROR_STATUS = (
    (StaleReferenceError, "stale_reference", 409),
    (StageError, "wrong_stage", 409),
    (FoldViolationError, "fold_violation", 409),
    (ReferentialIntegrityError, "unknown_reference", 404),
    (LogIntegrityError, "log_integrity", 400),
    (ValidationError, "invalid", 400),
    (BoxcampError, "error", 400),
)


def _error_response(exc: BoxcampError) -> JSONResponse:
    for etype, code, status in _ERROR_STATUS:
        if isinstance(exc, etype):
            return _err(code, str(exc), status)
    return _err("error", str(exc), 400)


def _decode_events(raw_events, image_id: int, fold: int) -> list[OperationEvent]:
    if not isinstance(raw_events, list):
        raise ValidationError("events must be an array")
    now_ms = int(time.time() * 1000)
    out = []
    for i, raw in enumerate(raw_events):
        if not isinstance(raw, dict):
            raise ValidationError(f"events[{i}]: expected an object")
        if raw.get("image_id") not in (None, image_id):
            raise ValidationError(f"events[{i}]: image_id does not match the URL")
        stage_tag = raw.get("stage_tag", f"fold{fold}")
        kind = raw.get("kind")
        box = raw.get("box")
        try:
            out.append(
                OperationEvent(
                    ts_ms=int(raw.get("ts_ms", now_ms)),
                    session_id=str(raw.get("session_id", "http")),
                    image_id=image_id,
                    kind=kind,
                    stage_tag=stage_tag,
                    box=BoundingBox(*box) if box is not None else None,
                    category_id=raw.get("category_id"),
                    target_ref=raw.get("target_ref"),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"events[{i}]: {exc}") from exc
    return out


def create_app(
    campaign: Campaign,
    plan_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="boxcamp", docs_url=None, redoc_url=None)
    request_cache: dict[str, dict] = {}

    @app.exception_handler(BoxcampError)
    async def _handle_domain_error(request: Request, exc: BoxcampError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _handle_validation(request: Request, exc: RequestValidationError):
        return _err("malformed_body", str(exc), 400)

    @app.exception_handler(StarletteHTTPException)
    async def _handle_http(request: Request, exc: StarletteHTTPException):
        return _err("not_found" if exc.status_code == 404 else "http_error",
                    str(exc.detail), exc.status_code)

    def _image_or_404(image_id: int):
        if image_id not in campaign.images:
            raise ReferentialIntegrityError(f"unknown image id {image_id}", [image_id])
        return campaign.images[image_id]

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON body: {exc.msg}") from exc
        if not isinstance(body, dict):
            raise ValidationError("body must be a JSON object")
        return body

    def _cached(request_id: str | None):
        if request_id is not None and request_id in request_cache:
            return _ok(request_cache[request_id])
        return None

    def _remember(request_id: str | None, data: dict) -> JSONResponse:
        if request_id is not None:
            request_cache[request_id] = data
        return _ok(data)

    def _image_payload(image_id: int) -> dict:
        im = _image_or_404(image_id)
        boxes = [
            {
                "ref": wb.ref,
                "x": wb.box.x,
                "y": wb.box.y,
                "w": wb.box.w,
                "h": wb.box.h,
                "category_id": wb.category_id,
                "source": wb.source,
                "score": wb.score,
            }
            for wb in campaign.working_boxes(image_id)
        ]
        return {
            "id": im.id,
            "file_name": im.file_name,
            "width": im.width,
            "height": im.height,
            "sequence_id": im.sequence_id,
            "frame_index": im.frame_index,
            "fold": campaign.fold_of[image_id],
            "status": campaign.status(image_id),
            "next_ref": campaign.next_ref(image_id),
            "boxes": boxes,
        }

    @app.get("/api/campaign")
    async def get_campaign():
        progress = campaign.stats()
        return _ok(
            {
                "stage": campaign.stage.value,
                "fraction": campaign.split.fraction,
                "images_total": len(campaign.images),
                "fold1_count": len(campaign.split.fold1_image_ids),
                "fold2_count": len(campaign.split.fold2_image_ids),
                "done": progress.images_done,
                "pending": progress.images_pending,
                "operations": progress.operations,
                "categories": {str(k): v for k, v in campaign.categories.items()},
            }
        )

    @app.get("/api/images")
    async def list_images(
        fold: int | None = None,
        status: str | None = None,
        page: int = 1,
        page_size: int = 50,
    ):
        if status is not None and status not in ("pending", "done"):
            raise ValidationError(f"unknown status filter {status!r}")
        if fold is not None and fold not in (1, 2):
            raise ValidationError(f"fold must be 1 or 2, got {fold}")
        if page < 1 or page_size < 1:
            raise ValidationError("page and page_size must be >= 1")
        ids = campaign.image_ids(fold=fold, status=status)
        start = (page - 1) * page_size
        window = ids[start : start + page_size]
        items = [
            {
                "id": i,
                "file_name": campaign.images[i].file_name,
                "fold": campaign.fold_of[i],
                "status": campaign.status(i),
                "box_count": len(campaign.working_boxes(i)),
            }
            for i in window
        ]
        return _ok({"items": items, "page": page, "page_size": page_size, "total": len(ids)})

    @app.get("/api/images/{image_id}")
    async def get_image(image_id: int):
        return _ok(_image_payload(image_id))

    @app.post("/api/images/{image_id}/operations")
    async def post_operations(image_id: int, request: Request):
        _image_or_404(image_id)
        body = await _json_body(request)
        request_id = body.get("request_id")
        cached = _cached(request_id)
        if cached is not None:
            return cached
        events = _decode_events(
            body.get("events", []), image_id, campaign.fold_of[image_id]
        )
        campaign.apply_operations(events)
        return _remember(request_id, {"applied": len(events), "image": _image_payload(image_id)})

    @app.post("/api/images/{image_id}/accept")
    async def post_accept(image_id: int, request: Request):
        _image_or_404(image_id)
        body = await _json_body(request)
        request_id = body.get("request_id")
        cached = _cached(request_id)
        if cached is not None:
            return cached
        event = OperationEvent(
            ts_ms=int(body.get("ts_ms", time.time() * 1000)),
            session_id=str(body.get("session_id", "http")),
            image_id=image_id,
            kind="accept_all",
            stage_tag=f"fold{campaign.fold_of[image_id]}",
        )
        campaign.apply_operations([event])
        return _remember(
            request_id,
            {"status": campaign.status(image_id), "stage": campaign.stage.value},
        )

    @app.get("/api/workload")
    async def get_workload():
        progress = campaign.stats()
        est = progress.estimate
        return _ok(
            {
                "initial": est.initial,
                "additions": est.additions,
                "removals": est.removals,
                "corrections": est.corrections,
                "total_operations": est.total_operations,
                "total_time_s": est.total_time_s,
                "timing": {"t1": est.timing.t1, "t2": est.timing.t2},
                "running_precision": progress.running_precision,
                "running_recall": progress.running_recall,
                "projected_remaining_s": progress.projected_remaining_s,
            }
        )

    @app.get("/api/plan")
    async def get_plan():
        if plan_path is None or not Path(plan_path).exists():
            return _err("no_plan", "no workload sweep has been run for this campaign", 404)
        return _ok(json.loads(Path(plan_path).read_text(encoding="utf-8")))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
