// Wire types for the campaign service API.

export interface BoxSpec {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface WorkingBox extends BoxSpec {
  ref: number;
  category_id: number;
  source: 'proposal' | 'manual';
  score: number | null;
}

export interface ImagePayload {
  id: number;
  file_name: string;
  width: number;
  height: number;
  sequence_id: string;
  frame_index: number;
  fold: 1 | 2;
  status: 'pending' | 'done';
  next_ref: number;
  boxes: WorkingBox[];
}

export interface ImageListItem {
  id: number;
  file_name: string;
  fold: 1 | 2;
  status: 'pending' | 'done';
  box_count: number;
}

export interface CampaignOverview {
  stage: string;
  fraction: number;
  images_total: number;
  fold1_count: number;
  fold2_count: number;
  done: number;
  pending: number;
  operations: Record<string, number>;
  categories: Record<string, string>;
}

export interface WorkloadSnapshot {
  initial: number;
  additions: number;
  removals: number;
  corrections: number;
  total_operations: number;
  total_time_s: number;
  timing: { t1: number; t2: number };
  running_precision: number | null;
  running_recall: number | null;
  projected_remaining_s: number | null;
}

// One human operation, as posted to /api/images/{id}/operations.
export type UiEvent =
  | {
      kind: 'add';
      ts_ms: number;
      session_id: string;
      box: [number, number, number, number];
      category_id: number;
    }
  | { kind: 'remove'; ts_ms: number; session_id: string; target_ref: number }
  | { kind: 'accept_all'; ts_ms: number; session_id: string };

export interface ApiError {
  code: string;
  message: string;
}

export type Envelope<T> =
  | { ok: true; data: T }
  | { ok: false; error: ApiError };
