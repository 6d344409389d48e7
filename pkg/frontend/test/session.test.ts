import { beforeEach, describe, expect, it } from 'vitest';

import { ApiRequestError, type CampaignApi } from '../src/api.js';
import { deleteBox, type Gesture } from '../src/gestures.js';
import { UiSession } from '../src/session.js';
import type { ImagePayload, UiEvent, WorkingBox } from '../src/types.js';

/**
 * In-memory stand-in for the campaign service with the semantics the
 * session relies on: deterministic refs, request-id idempotency, 409 on
 * stale removes. The real-service behavior is covered by the
 * service acceptance test.
 */
class FakeService implements CampaignApi {
  images = new Map<number, { boxes: Map<number, WorkingBox>; nextRef: number; done: boolean }>();
  order: number[] = [];
  log: Array<{ imageId: number; ev: UiEvent }> = [];
  private cache = new Map<string, { applied: number; image: ImagePayload }>();
  private acceptCache = new Map<string, { status: string; stage: string }>();
  loseResponses = 0; // apply + cache, then fail the response (lost reply)

  addImage(id: number, proposals: Array<[number, number, number, number]>): void {
    const boxes = new Map<number, WorkingBox>();
    proposals.forEach(([x, y, w, h], i) => {
      boxes.set(i, { ref: i, x, y, w, h, category_id: 1, source: 'proposal', score: 0.9 });
    });
    this.images.set(id, { boxes, nextRef: proposals.length, done: false });
    this.order.push(id);
  }

  private payload(id: number): ImagePayload {
    const st = this.images.get(id)!;
    return {
      id,
      file_name: `cam0_${String(id).padStart(4, '0')}.jpg`,
      width: 640,
      height: 480,
      sequence_id: 'cam0',
      frame_index: id,
      fold: 2,
      status: st.done ? 'done' : 'pending',
      next_ref: st.nextRef,
      boxes: [...st.boxes.values()].map((b) => ({ ...b })),
    };
  }

  async campaign(): Promise<never> {
    throw new Error('not needed');
  }

  async workload(): Promise<never> {
    throw new Error('not needed');
  }

  async listImages({ status }: { status?: string }) {
    const items = this.order
      .filter((id) => (status === 'pending' ? !this.images.get(id)!.done : true))
      .map((id) => ({
        id,
        file_name: `cam0_${id}.jpg`,
        fold: 2 as const,
        status: this.images.get(id)!.done ? ('done' as const) : ('pending' as const),
        box_count: this.images.get(id)!.boxes.size,
      }));
    return { items, total: items.length };
  }

  async image(id: number): Promise<ImagePayload> {
    return this.payload(id);
  }

  async postOperations(imageId: number, requestId: string, events: UiEvent[]) {
    const cached = this.cache.get(requestId);
    if (cached) return cached;
    const st = this.images.get(imageId)!;
    for (const ev of events) {
      if (ev.kind === 'add') {
        const ref = st.nextRef++;
        st.boxes.set(ref, {
          ref,
          x: ev.box[0], y: ev.box[1], w: ev.box[2], h: ev.box[3],
          category_id: ev.category_id, source: 'manual', score: null,
        });
      } else if (ev.kind === 'remove') {
        if (!st.boxes.has(ev.target_ref)) {
          throw new ApiRequestError(409, 'stale_reference', `no ref ${ev.target_ref}`);
        }
        st.boxes.delete(ev.target_ref);
      }
      this.log.push({ imageId, ev });
    }
    const result = { applied: events.length, image: this.payload(imageId) };
    this.cache.set(requestId, result);
    if (this.loseResponses > 0) {
      this.loseResponses -= 1;
      throw new TypeError('network: connection reset');
    }
    return result;
  }

  async accept(imageId: number, requestId: string, sessionId: string, tsMs: number) {
    const cached = this.acceptCache.get(requestId);
    if (cached) return cached;
    this.images.get(imageId)!.done = true;
    this.log.push({
      imageId,
      ev: { kind: 'accept_all', ts_ms: tsMs, session_id: sessionId },
    });
    const result = { status: 'done', stage: 'fold2_correction' };
    this.acceptCache.set(requestId, result);
    return result;
  }
}

function makeClock(start = 1000, step = 100): () => number {
  let t = start;
  return () => (t += step);
}

const addGesture = (box: [number, number, number, number], cat = 1): Gesture => ({
  kind: 'add',
  box,
  category_id: cat,
});

describe('UiSession', () => {
  let service: FakeService;
  let session: UiSession;

  beforeEach(() => {
    service = new FakeService();
    service.addImage(1, [[10, 10, 50, 50]]);
    service.addImage(2, []);
    session = new UiSession(service, 'test-session', makeClock());
  });

  it('drains pending events in submission order', async () => {
    await session.open(1);
    session.capture([deleteBox(0)]);
    session.capture([addGesture([5, 5, 20, 20])]);
    expect(session.pendingEvents().map((e) => e.kind)).toEqual(['remove', 'add']);
    await session.sync();
    expect(service.log.map((l) => l.ev.kind)).toEqual(['remove', 'add']);
    expect(session.pendingEvents()).toHaveLength(0);
  });

  it('predicts refs so a just-drawn box can be deleted before sync', async () => {
    await session.open(1);
    session.capture([addGesture([5, 5, 20, 20])]); // predicted ref 1
    expect(session.image!.boxes.map((b) => b.ref)).toEqual([0, 1]);
    session.capture([deleteBox(1)]);
    expect(session.image!.boxes.map((b) => b.ref)).toEqual([0]);
    await session.sync();
    expect(service.images.get(1)!.boxes.size).toBe(1); // net unchanged
    expect(service.log).toHaveLength(2); // but both operations logged
  });

  it('timestamps are non-decreasing even if the wall clock jumps back', async () => {
    let calls = 0;
    const jumpy = () => [1000, 2000, 1500, 3000][calls++] ?? 4000;
    session = new UiSession(service, 's', jumpy);
    await session.open(1);
    session.capture([addGesture([1, 1, 5, 5]), addGesture([10, 10, 5, 5]), deleteBox(0)]);
    const ts = session.pendingEvents().map((e) => e.ts_ms);
    expect(ts).toEqual([...ts].sort((a, b) => a - b));
  });

  it('keeps the batch and request id across network failures (no duplicates)', async () => {
    await session.open(1);
    session.capture([addGesture([5, 5, 20, 20])]);
    service.loseResponses = 1; // server applies, response is lost
    await expect(session.sync()).rejects.toThrow(/network/);
    expect(session.pendingEvents()).toHaveLength(1); // retained for retry
    await session.sync(); // same request id: served from the cache
    expect(service.log.filter((l) => l.ev.kind === 'add')).toHaveLength(1);
    expect(session.counters.add).toBe(1);
  });

  it('recovers from 409 by reloading and replaying what still applies', async () => {
    await session.open(1);
    // out-of-band change: another session already removed proposal 0
    service.images.get(1)!.boxes.delete(0);
    session.capture([deleteBox(0), addGesture([30, 30, 10, 10])]);
    const result = await session.sync();
    expect(result.conflicts).toHaveLength(1); // the stale remove surfaced
    expect(result.conflicts[0].kind).toBe('remove');
    expect(result.applied).toBe(1); // the add was replayed
    const boxes = service.images.get(1)!.boxes;
    expect([...boxes.values()].some((b) => b.x === 30)).toBe(true);
  });

  it('syncAndAdvance accepts and fetches the next pending image', async () => {
    await session.open(1);
    session.capture([deleteBox(0)]);
    const result = await session.syncAndAdvance();
    expect(result.accepted).toBe(true);
    expect(result.next?.id).toBe(2);
    expect(service.images.get(1)!.done).toBe(true);
    const second = await session.syncAndAdvance();
    expect(second.next).toBeNull(); // campaign complete
  });

  it('confirmed counters match the service log after a full pass', async () => {
    await session.open(1);
    session.capture([deleteBox(0), addGesture([5, 5, 10, 10])]);
    await session.syncAndAdvance();
    session.capture([addGesture([50, 50, 10, 10], 1)]);
    await session.syncAndAdvance();
    const logKinds = service.log.map((l) => l.ev.kind);
    expect(session.counters.add).toBe(logKinds.filter((k) => k === 'add').length);
    expect(session.counters.remove).toBe(logKinds.filter((k) => k === 'remove').length);
    expect(session.counters.accept_all).toBe(
      logKinds.filter((k) => k === 'accept_all').length,
    );
  });

  it('refuses to switch images with unsynced events', async () => {
    await session.open(1);
    session.capture([deleteBox(0)]);
    await expect(session.open(2)).rejects.toThrow(/unsynced/);
  });
});
