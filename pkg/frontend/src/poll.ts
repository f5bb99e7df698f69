/** Poll a job until it reaches a terminal state. Resolves with the summary on
 * success, rejects with the job error on failure. One loop per job; the
 * active job id is all that is needed to resume after a page reload. */

import type { ApiClient } from './api.js';
import type { JobSummary } from './types.js';

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (job: JobSummary) => void;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobSummary> {
  const interval = options.intervalMs ?? 500;
  const deadline = options.timeoutMs ? Date.now() + options.timeoutMs : null;
  for (;;) {
    const job = await client.getJob(jobId);
    options.onUpdate?.(job);
    if (job.status === 'done') {
      return job;
    }
    if (job.status === 'failed') {
      throw new Error(job.error ?? 'job failed');
    }
    if (deadline !== null && Date.now() > deadline) {
      throw new Error(`timed out waiting for job ${jobId}`);
    }
    await sleep(interval);
  }
}
