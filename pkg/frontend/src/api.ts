import type {
  CampaignOverview,
  Envelope,
  ImageListItem,
  ImagePayload,
  UiEvent,
  WorkloadSnapshot,
} from './types.js';

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** What the session needs from the service; ApiClient is the real one. */
export interface CampaignApi {
  campaign(): Promise<CampaignOverview>;
  workload(): Promise<WorkloadSnapshot>;
  listImages(params: {
    fold?: number;
    status?: string;
    page?: number;
    page_size?: number;
  }): Promise<{ items: ImageListItem[]; total: number }>;
  image(id: number): Promise<ImagePayload>;
  postOperations(
    imageId: number,
    requestId: string,
    events: UiEvent[],
  ): Promise<{ applied: number; image: ImagePayload }>;
  accept(
    imageId: number,
    requestId: string,
    sessionId: string,
    tsMs: number,
  ): Promise<{ status: string; stage: string }>;
}

/** Thin typed wrapper over the campaign service; all state lives server-side. */
export class ApiClient implements CampaignApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    let body: Envelope<T>;
    try {
      body = (await resp.json()) as Envelope<T>;
    } catch {
      throw new ApiRequestError(resp.status, 'bad_response', 'response was not JSON');
    }
    if (!body.ok) {
      throw new ApiRequestError(resp.status, body.error.code, body.error.message);
    }
    return body.data;
  }

  campaign(): Promise<CampaignOverview> {
    return this.request('/api/campaign');
  }

  workload(): Promise<WorkloadSnapshot> {
    return this.request('/api/workload');
  }

  listImages(params: {
    fold?: number;
    status?: string;
    page?: number;
    page_size?: number;
  }): Promise<{ items: ImageListItem[]; total: number }> {
    const q = new URLSearchParams();
    for (const [k, v] of Object.entries(params)) {
      if (v !== undefined) q.set(k, String(v));
    }
    const suffix = q.toString() ? `?${q.toString()}` : '';
    return this.request(`/api/images${suffix}`);
  }

  image(id: number): Promise<ImagePayload> {
    return this.request(`/api/images/${id}`);
  }

  postOperations(
    imageId: number,
    requestId: string,
    events: UiEvent[],
  ): Promise<{ applied: number; image: ImagePayload }> {
    return this.request(`/api/images/${imageId}/operations`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ request_id: requestId, events }),
    });
  }

  accept(
    imageId: number,
    requestId: string,
    sessionId: string,
    tsMs: number,
  ): Promise<{ status: string; stage: string }> {
    return this.request(`/api/images/${imageId}/accept`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ request_id: requestId, session_id: sessionId, ts_ms: tsMs }),
    });
  }
}
