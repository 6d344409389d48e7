import { describe, expect, it } from 'vitest';

import { dragToAdd, deleteBox, relabelBox, toEvents } from '../src/gestures.js';
import { DEFAULT_VIEWPORT } from '../src/scene.js';
import type { WorkingBox } from '../src/types.js';

const image = { width: 200, height: 100 };

describe('dragToAdd', () => {
  it('maps a drag to an image-space add', () => {
    const g = dragToAdd({ x: 10, y: 10 }, { x: 60, y: 90 }, 3, DEFAULT_VIEWPORT, image);
    expect(g).toEqual({ kind: 'add', box: [10, 10, 50, 80], category_id: 3 });
  });

  it('normalizes reversed drags', () => {
    const g = dragToAdd({ x: 60, y: 90 }, { x: 10, y: 10 }, 1, DEFAULT_VIEWPORT, image);
    expect(g?.box).toEqual([10, 10, 50, 80]);
  });

  it('discards zero-area drags without an event', () => {
    expect(dragToAdd({ x: 10, y: 10 }, { x: 10, y: 40 }, 1, DEFAULT_VIEWPORT, image)).toBeNull();
    expect(dragToAdd({ x: 10, y: 10 }, { x: 10, y: 10 }, 1, DEFAULT_VIEWPORT, image)).toBeNull();
  });

  it('converts screen to image coordinates under zoom and pan', () => {
    const vp = { zoom: 2, panX: 20, panY: 10 };
    const g = dragToAdd({ x: 20, y: 10 }, { x: 120, y: 110 }, 1, vp, image);
    expect(g?.box).toEqual([0, 0, 50, 50]);
  });

  it('clips the box to the frame', () => {
    const g = dragToAdd({ x: -30, y: -20 }, { x: 250, y: 120 }, 1, DEFAULT_VIEWPORT, image);
    expect(g?.box).toEqual([0, 0, 200, 100]);
  });
});

describe('relabelBox', () => {
  it('emits a remove+add pair with unchanged geometry', () => {
    const wb: WorkingBox = {
      ref: 2, x: 5, y: 6, w: 30, h: 40, category_id: 3, source: 'proposal', score: 0.8,
    };
    expect(relabelBox(wb, 5)).toEqual([
      { kind: 'remove', target_ref: 2 },
      { kind: 'add', box: [5, 6, 30, 40], category_id: 5 },
    ]);
  });
});

describe('toEvents', () => {
  it('is deterministic for a scripted gesture sequence', () => {
    const gestures = [
      deleteBox(2),
      { kind: 'add' as const, box: [1, 2, 3, 4] as [number, number, number, number], category_id: 1 },
    ];
    let t = 100;
    const stamp = () => (t += 10);
    const events = toEvents(gestures, 's', stamp);
    expect(events).toEqual([
      { kind: 'remove', ts_ms: 110, session_id: 's', target_ref: 2 },
      { kind: 'add', ts_ms: 120, session_id: 's', box: [1, 2, 3, 4], category_id: 1 },
    ]);
  });
});
