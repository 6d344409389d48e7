// Browser entry: wires the canvas, keyboard, and session together.
// Everything testable lives in the pure modules; this file is DOM glue.

import { ApiClient } from './api.js';
import { dragToAdd, deleteBox } from './gestures.js';
import { interpretKey } from './keyboard.js';
import { buildScene, drawScene, hitTest, DEFAULT_VIEWPORT, type Viewport } from './scene.js';
import { UiSession } from './session.js';
import type { CampaignOverview, ImagePayload } from './types.js';

const api = new ApiClient('');
const session = new UiSession(api, `ui-${Date.now().toString(36)}`);

const canvas = document.getElementById('frame') as HTMLCanvasElement;
const status = document.getElementById('status') as HTMLElement;
const banner = document.getElementById('banner') as HTMLElement;

let overview: CampaignOverview | null = null;
let viewport: Viewport = { ...DEFAULT_VIEWPORT };
let category = 1;
let hoveredRef: number | null = null;
let dragStart: { x: number; y: number } | null = null;
let assetMissing = false;
let frame: HTMLImageElement | null = null;

function setBanner(text: string | null): void {
  banner.textContent = text ?? '';
  banner.style.display = text ? 'block' : 'none';
}

function setStatus(text: string): void {
  status.textContent = text;
}

function fitViewport(image: ImagePayload): void {
  const scale = Math.min(
    1,
    (canvas.clientWidth || image.width) / image.width,
    (canvas.clientHeight || image.height) / image.height,
  );
  viewport = { zoom: scale, panX: 0, panY: 0 };
}

function redraw(): void {
  const image = session.image;
  const ctx = canvas.getContext('2d');
  if (!ctx || !image || !overview) return;
  canvas.width = Math.ceil(image.width * viewport.zoom);
  canvas.height = Math.ceil(image.height * viewport.zoom);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (frame && !assetMissing) {
    ctx.drawImage(frame, viewport.panX, viewport.panY, canvas.width, canvas.height);
  }
  const scene = buildScene(image, overview.categories, viewport, {
    hoveredRef: hoveredRef ?? undefined,
    assetMissing,
  });
  ctx.font = '12px sans-serif';
  drawScene(ctx, scene);
  const pendingNote = session.pendingEvents().length
    ? ` | ${session.pendingEvents().length} unsynced`
    : '';
  setStatus(
    `image ${image.id} (${image.file_name}) | fold ${image.fold} | ` +
      `category ${category} (${overview.categories[String(category)] ?? '?'})` +
      `${pendingNote} | keys: 1-9 category, drag to draw, D delete, A accept`,
  );
}

async function loadFrameAsset(image: ImagePayload): Promise<void> {
  assetMissing = false;
  frame = null;
  await new Promise<void>((resolve) => {
    const el = new Image();
    el.onload = () => {
      frame = el;
      resolve();
    };
    el.onerror = () => {
      assetMissing = true; // placeholder rendering, no events emitted
      resolve();
    };
    el.src = `/ui/assets/${image.file_name}`;
  });
}

async function showImage(image: ImagePayload | null): Promise<void> {
  if (!image) {
    const workload = await api.workload();
    setBanner(null);
    setStatus(
      `all images done | operations ${workload.total_operations} | ` +
        `estimated manual time ${(workload.total_time_s / 3600).toFixed(2)} h`,
    );
    const ctx = canvas.getContext('2d');
    ctx?.clearRect(0, 0, canvas.width, canvas.height);
    return;
  }
  await loadFrameAsset(image);
  setBanner(assetMissing ? `missing asset: ${image.file_name}` : null);
  fitViewport(image);
  redraw();
}

canvas.addEventListener('mousedown', (ev) => {
  dragStart = { x: ev.offsetX, y: ev.offsetY };
});

canvas.addEventListener('mousemove', (ev) => {
  if (!session.image) return;
  hoveredRef = hitTest(session.image.boxes, { x: ev.offsetX, y: ev.offsetY }, viewport);
  redraw();
});

canvas.addEventListener('mouseup', (ev) => {
  if (!dragStart || !session.image || assetMissing) {
    dragStart = null;
    return;
  }
  const gesture = dragToAdd(
    dragStart,
    { x: ev.offsetX, y: ev.offsetY },
    category,
    viewport,
    session.image,
  );
  dragStart = null;
  if (gesture) {
    session.capture([gesture]);
    redraw();
  }
});

window.addEventListener('keydown', (ev) => {
  const action = interpretKey(ev.key);
  if (!action || !session.image) return;
  if (action.type === 'select-category') {
    category = action.category;
    redraw();
  } else if (action.type === 'delete-hovered' && hoveredRef !== null) {
    session.capture([deleteBox(hoveredRef)]);
    hoveredRef = null;
    redraw();
  } else if (action.type === 'accept-image') {
    void session
      .syncAndAdvance()
      .then((result) => {
        if (result.conflicts.length > 0) {
          setBanner(`${result.conflicts.length} conflicting edits dropped after reload`);
        }
        return showImage(result.next);
      })
      .catch((err) => setBanner(`sync failed, will retry: ${err}`));
  }
});

async function start(): Promise<void> {
  overview = await api.campaign();
  const fold = overview.stage === 'fold1_annotation' ? 1 : 2;
  const first = await session.openNextPending(fold);
  await showImage(first);
}

void start().catch((err) => setBanner(`failed to load campaign: ${err}`));
