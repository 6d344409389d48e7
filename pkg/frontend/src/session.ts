// The annotation session: local pending operations, monotone timestamps,
// and idempotent sync against the campaign service.
//
// Pending events drain in submission order. A batch keeps its request id
// across network retries, so a lost response cannot double-apply; the
// service replays the recorded response instead. A 409 means the service
// rejected the batch outright (stale ref or stage change): the session
// reloads the image and replays what still makes sense, surfacing the rest.

import type { CampaignApi } from './api.js';
import { ApiRequestError } from './api.js';
import type { Gesture } from './gestures.js';
import { toEvents } from './gestures.js';
import type { ImagePayload, UiEvent } from './types.js';

export interface SyncResult {
  applied: number;
  conflicts: UiEvent[];
  accepted: boolean;
  next: ImagePayload | null;
}

export interface SentRequest {
  path: string;
  body: unknown;
}

export class UiSession {
  private pending: UiEvent[] = [];
  private lastTs = 0;
  private requestCounter = 0;
  private currentRequestId: string | null = null;
  private predictedNextRef = 0;
  image: ImagePayload | null = null;

  /** Confirmed-by-the-service operation counts. */
  readonly counters = { add: 0, remove: 0, accept_all: 0 };
  /** Every request actually sent; lets tests re-fire one verbatim. */
  readonly sentRequests: SentRequest[] = [];

  constructor(
    private readonly api: CampaignApi,
    readonly sessionId: string,
    private readonly clock: () => number = Date.now,
  ) {}

  /** Monotone within the session even if the wall clock steps backwards. */
  private stamp(): number {
    const ts = Math.max(this.clock(), this.lastTs);
    this.lastTs = ts;
    return ts;
  }

  private nextRequestId(): string {
    this.requestCounter += 1;
    return `${this.sessionId}-${this.requestCounter}`;
  }

  pendingEvents(): readonly UiEvent[] {
    return this.pending;
  }

  async open(imageId: number): Promise<ImagePayload> {
    if (this.pending.length > 0) {
      throw new Error('cannot switch images with unsynced events');
    }
    const payload = await this.api.image(imageId);
    this.image = payload;
    this.predictedNextRef = payload.next_ref;
    return payload;
  }

  async openNextPending(fold = 2): Promise<ImagePayload | null> {
    const page = await this.api.listImages({ fold, status: 'pending', page_size: 1 });
    if (page.items.length === 0) {
      return null;
    }
    return this.open(page.items[0].id);
  }

  /**
   * Queue gestures as events. Adds are applied to the local view with a
   * predicted ref (the service assigns refs deterministically), so a
   * follow-up delete of a just-drawn box works before any sync.
   */
  capture(gestures: Gesture[]): UiEvent[] {
    if (!this.image) {
      throw new Error('no image open');
    }
    const events = toEvents(gestures, this.sessionId, () => this.stamp());
    for (const [i, ev] of events.entries()) {
      if (ev.kind === 'add') {
        const g = gestures[i];
        if (g.kind !== 'add') throw new Error('gesture/event mismatch');
        const ref = this.predictedNextRef++;
        this.image.boxes.push({
          ref,
          x: g.box[0],
          y: g.box[1],
          w: g.box[2],
          h: g.box[3],
          category_id: g.category_id,
          source: 'manual',
          score: null,
        });
      } else if (ev.kind === 'remove') {
        const idx = this.image.boxes.findIndex((b) => b.ref === ev.target_ref);
        if (idx < 0) {
          throw new Error(`no box with ref ${ev.target_ref}`);
        }
        this.image.boxes.splice(idx, 1);
      }
      this.pending.push(ev);
    }
    return events;
  }

  /**
   * Push pending events. Network errors keep the batch (and its request id)
   * for a later retry; a 409 reloads the image and replays the events that
   * still apply, returning the rest as conflicts.
   */
  async sync(): Promise<{ applied: number; conflicts: UiEvent[] }> {
    if (!this.image || this.pending.length === 0) {
      return { applied: 0, conflicts: [] };
    }
    const imageId = this.image.id;
    this.currentRequestId = this.currentRequestId ?? this.nextRequestId();
    const body = { request_id: this.currentRequestId, events: this.pending };
    this.sentRequests.push({ path: `/api/images/${imageId}/operations`, body });
    try {
      const result = await this.api.postOperations(imageId, this.currentRequestId, this.pending);
      for (const ev of this.pending) {
        if (ev.kind === 'add') this.counters.add += 1;
        else if (ev.kind === 'remove') this.counters.remove += 1;
      }
      this.pending = [];
      this.currentRequestId = null;
      this.image = result.image;
      this.predictedNextRef = result.image.next_ref;
      return { applied: result.applied, conflicts: [] };
    } catch (err) {
      if (err instanceof ApiRequestError && err.status === 409) {
        return this.recoverFromConflict(imageId);
      }
      throw err; // network or server trouble: batch stays queued for retry
    }
  }

  private async recoverFromConflict(
    imageId: number,
  ): Promise<{ applied: number; conflicts: UiEvent[] }> {
    const stale = this.pending;
    this.pending = [];
    this.currentRequestId = null;
    const fresh = await this.api.image(imageId);
    this.image = fresh;
    this.predictedNextRef = fresh.next_ref;

    const conflicts: UiEvent[] = [];
    const replayable: Gesture[] = [];
    const liveRefs = new Set(fresh.boxes.map((b) => b.ref));
    for (const ev of stale) {
      if (ev.kind === 'add') {
        replayable.push({ kind: 'add', box: ev.box, category_id: ev.category_id });
      } else if (ev.kind === 'remove' && liveRefs.has(ev.target_ref)) {
        replayable.push({ kind: 'remove', target_ref: ev.target_ref });
        liveRefs.delete(ev.target_ref);
      } else {
        conflicts.push(ev);
      }
    }
    if (replayable.length > 0) {
      this.capture(replayable);
      const result = await this.sync();
      return { applied: result.applied, conflicts: [...conflicts, ...result.conflicts] };
    }
    return { applied: 0, conflicts };
  }

  /** Sync, accept the image, and move to the next pending one. */
  async syncAndAdvance(): Promise<SyncResult> {
    if (!this.image) {
      throw new Error('no image open');
    }
    const { applied, conflicts } = await this.sync();
    const imageId = this.image.id;
    const requestId = this.nextRequestId();
    const ts = this.stamp();
    this.sentRequests.push({
      path: `/api/images/${imageId}/accept`,
      body: { request_id: requestId, session_id: this.sessionId, ts_ms: ts },
    });
    await this.api.accept(imageId, requestId, this.sessionId, ts);
    this.counters.accept_all += 1;
    this.image = null;
    const next = await this.openNextPending();
    return { applied, conflicts, accepted: true, next };
  }
}
