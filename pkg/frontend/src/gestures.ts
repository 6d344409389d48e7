// Gesture-to-operation mapping. Deterministic: a scripted gesture sequence
// always yields the same event list (timestamps come from the caller).

import type { Point, Viewport } from './scene.js';
import { toImage } from './scene.js';
import type { ImagePayload, UiEvent, WorkingBox } from './types.js';

export interface AddGesture {
  kind: 'add';
  box: [number, number, number, number]; // image coords
  category_id: number;
}

export interface RemoveGesture {
  kind: 'remove';
  target_ref: number;
}

export type Gesture = AddGesture | RemoveGesture;

/**
 * Drag-to-draw: both corners in screen coordinates. Returns the image-space
 * add gesture, or null for a zero-area drag (discarded without an event).
 * The box is clipped to the frame.
 */
export function dragToAdd(
  start: Point,
  end: Point,
  categoryId: number,
  vp: Viewport,
  image: Pick<ImagePayload, 'width' | 'height'>,
): AddGesture | null {
  const a = toImage(start, vp);
  const b = toImage(end, vp);
  const x1 = Math.max(0, Math.min(a.x, b.x));
  const y1 = Math.max(0, Math.min(a.y, b.y));
  const x2 = Math.min(image.width, Math.max(a.x, b.x));
  const y2 = Math.min(image.height, Math.max(a.y, b.y));
  if (x2 - x1 <= 0 || y2 - y1 <= 0) {
    return null;
  }
  return { kind: 'add', box: [x1, y1, x2 - x1, y2 - y1], category_id: categoryId };
}

export function deleteBox(ref: number): RemoveGesture {
  return { kind: 'remove', target_ref: ref };
}

/**
 * Relabeling is modeled as remove + add of the same geometry under the new
 * category: two operations, matching the service's correction cost model.
 */
export function relabelBox(box: WorkingBox, newCategoryId: number): Gesture[] {
  return [
    { kind: 'remove', target_ref: box.ref },
    { kind: 'add', box: [box.x, box.y, box.w, box.h], category_id: newCategoryId },
  ];
}

/** Stamp gestures into wire events; timestamps at gesture completion. */
export function toEvents(
  gestures: Gesture[],
  sessionId: string,
  stamp: () => number,
): UiEvent[] {
  return gestures.map((g) => {
    const ts = stamp();
    if (g.kind === 'add') {
      return {
        kind: 'add',
        ts_ms: ts,
        session_id: sessionId,
        box: g.box,
        category_id: g.category_id,
      };
    }
    return { kind: 'remove', ts_ms: ts, session_id: sessionId, target_ref: g.target_ref };
  });
}
