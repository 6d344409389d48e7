// Pure view math: image-space boxes to screen-space draw commands.
// The viewport only affects how boxes are drawn, never their stored
// coordinates.

import type { ImagePayload, WorkingBox } from './types.js';

export interface Viewport {
  zoom: number; // screen px per image px
  panX: number; // screen offset of image origin
  panY: number;
}

export const DEFAULT_VIEWPORT: Viewport = { zoom: 1, panX: 0, panY: 0 };

export interface Point {
  x: number;
  y: number;
}

export function toScreen(p: Point, vp: Viewport): Point {
  return { x: p.x * vp.zoom + vp.panX, y: p.y * vp.zoom + vp.panY };
}

export function toImage(p: Point, vp: Viewport): Point {
  return { x: (p.x - vp.panX) / vp.zoom, y: (p.y - vp.panY) / vp.zoom };
}

export interface SceneRect {
  ref: number;
  x: number; // screen px
  y: number;
  w: number;
  h: number;
  style: 'proposal' | 'manual' | 'hovered';
  label: string;
}

export interface Scene {
  imageWidth: number; // screen px of the full frame
  imageHeight: number;
  rects: SceneRect[];
  placeholder: boolean; // true when the frame asset could not be loaded
}

export function buildScene(
  payload: ImagePayload,
  categories: Record<string, string>,
  vp: Viewport = DEFAULT_VIEWPORT,
  opts: { hoveredRef?: number; assetMissing?: boolean } = {},
): Scene {
  const rects = payload.boxes.map((wb) => {
    const origin = toScreen({ x: wb.x, y: wb.y }, vp);
    const style =
      wb.ref === opts.hoveredRef ? 'hovered' : wb.source === 'proposal' ? 'proposal' : 'manual';
    return {
      ref: wb.ref,
      x: origin.x,
      y: origin.y,
      w: wb.w * vp.zoom,
      h: wb.h * vp.zoom,
      style: style as SceneRect['style'],
      label: categories[String(wb.category_id)] ?? `category ${wb.category_id}`,
    };
  });
  return {
    imageWidth: payload.width * vp.zoom,
    imageHeight: payload.height * vp.zoom,
    rects,
    placeholder: Boolean(opts.assetMissing),
  };
}

/** Topmost box under the cursor (screen coords); later boxes win ties. */
export function hitTest(boxes: WorkingBox[], screen: Point, vp: Viewport): number | null {
  const p = toImage(screen, vp);
  let hit: number | null = null;
  for (const wb of boxes) {
    if (p.x >= wb.x && p.x <= wb.x + wb.w && p.y >= wb.y && p.y <= wb.y + wb.h) {
      hit = wb.ref;
    }
  }
  return hit;
}

const STYLE_COLORS: Record<SceneRect['style'], string> = {
  proposal: '#e8a117', // amber: machine-suggested, accepted unless removed
  manual: '#2e9df7',
  hovered: '#f74f4f',
};

export interface CanvasLike {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

export function drawScene(ctx: CanvasLike, scene: Scene): void {
  if (scene.placeholder) {
    ctx.fillStyle = '#444';
    ctx.fillRect(0, 0, scene.imageWidth, scene.imageHeight);
    ctx.fillStyle = '#fff';
    ctx.fillText('image asset missing', 12, 24);
    return;
  }
  for (const rect of scene.rects) {
    ctx.lineWidth = rect.style === 'hovered' ? 3 : 2;
    ctx.setLineDash(rect.style === 'proposal' ? [6, 4] : []);
    ctx.strokeStyle = STYLE_COLORS[rect.style];
    ctx.strokeRect(rect.x, rect.y, rect.w, rect.h);
    ctx.fillStyle = STYLE_COLORS[rect.style];
    ctx.fillText(rect.label, rect.x + 3, rect.y - 4);
  }
}
