import type {
  CameraSummary,
  EntityTrace,
  JobStatus,
  NetworkSummary,
  SearchHit,
  Segment,
  StoreStats,
} from './types';

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorName: string,
    detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

type Params = Record<string, string | number | undefined>;

/** Thin fetch wrapper over the service API; one base-URL setting. */
export class ApiClient {
  constructor(public baseUrl: string) {}

  private async get<T>(path: string, params?: Params): Promise<T> {
    const url = new URL(`${this.baseUrl}${path}`);
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) url.searchParams.set(key, String(value));
    }
    const response = await fetch(url);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body.error ?? 'UnknownError', body.detail ?? '');
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.get('/api/health');
  }

  segments(cameraId: string, fromMs?: number, toMs?: number): Promise<Segment[]> {
    return this.get(`/api/cameras/${encodeURIComponent(cameraId)}/segments`, {
      from_ms: fromMs,
      to_ms: toMs,
    });
  }

  cameraSummary(cameraId: string, fromMs?: number, toMs?: number): Promise<CameraSummary> {
    return this.get(`/api/cameras/${encodeURIComponent(cameraId)}/summary`, {
      from_ms: fromMs,
      to_ms: toMs,
    });
  }

  networkSummary(fromMs?: number, toMs?: number): Promise<NetworkSummary> {
    return this.get('/api/network/summary', { from_ms: fromMs, to_ms: toMs });
  }

  search(q: string, opts: { camera?: string; fromMs?: number; toMs?: number; limit?: number } = {}):
      Promise<SearchHit[]> {
    return this.get('/api/search', {
      q,
      camera: opts.camera,
      from_ms: opts.fromMs,
      to_ms: opts.toMs,
      limit: opts.limit,
    });
  }

  trackEntity(q: string, fromMs?: number, toMs?: number): Promise<EntityTrace> {
    return this.get('/api/track', { q, from_ms: fromMs, to_ms: toMs });
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}`);
  }

  stats(): Promise<StoreStats> {
    return this.get('/api/stats');
  }
}
