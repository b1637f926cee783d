// Client-side mirrors of the service API payloads. Field names and shapes
// match the wire format exactly; the dashboard never reshapes or re-ranks.

export interface Segment {
  camera_id: string;
  start_ms: number;
  end_ms: number;
  representative_text: string;
  frame_count: number;
}

export interface CameraSummary {
  camera_id: string;
  window: [number, number];
  lines: Array<[number, number, string]>;
  strategy: string;
  model_id: string | null;
}

export interface NetworkSummary {
  window: [number, number];
  lines: Array<[string, number, number, string]>;
  strategy: string;
  model_id: string | null;
}

export interface SearchHit {
  kind: string;
  camera_id: string;
  start_ms: number;
  end_ms: number;
  text: string;
  score: number;
}

export interface TraceHop {
  camera_id: string;
  start_ms: number;
  end_ms: number;
  matched_text: string;
}

export interface EntityTrace {
  query: string;
  hops: TraceHop[];
}

export interface JobStatus {
  job_id: string;
  camera_id: string;
  phase: string;
  frames_total: number;
  frames_done: number;
  gaps: number[];
  error: string | null;
  retries: number;
}

export interface CompressionStats {
  source_bytes: number;
  caption_bytes: number;
  summary_bytes: number;
  ratio: number | null;
}

export interface StoreStats {
  per_camera: Record<string, CompressionStats>;
  total: CompressionStats;
  unknown_sources: string[];
}
