import type { ApiClient } from './api';
import type { JobStatus } from './types';

const TERMINAL_PHASES = new Set(['done', 'failed']);

export interface PollOptions {
  intervalMs?: number; // default 5s, matching the dashboard's refresh cadence
  timeoutMs?: number;
}

/** Poll a job until done/failed; resolves with the terminal status. */
export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobStatus> {
  const intervalMs = options.intervalMs ?? 5000;
  const deadline = options.timeoutMs !== undefined ? Date.now() + options.timeoutMs : undefined;
  for (;;) {
    const status = await client.jobStatus(jobId);
    if (TERMINAL_PHASES.has(status.phase)) return status;
    if (deadline !== undefined && Date.now() >= deadline) {
      throw new Error(`job ${jobId} still ${status.phase} after timeout`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
