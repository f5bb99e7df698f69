import { describe, expect, it, vi } from 'vitest';

import type { ApiClient } from '../src/api.js';
import { pollJob } from '../src/poll.js';
import type { JobSummary } from '../src/types.js';

function summary(status: JobSummary['status'], error: string | null = null): JobSummary {
  return {
    id: 'job1',
    task: 'counting',
    mode: 'A',
    status,
    boxes: [],
    seed: 0,
    inputs: ['input_000.png'],
    results: status === 'done' ? ['count.json'] : [],
    error,
    timings_ms: status === 'done' ? 12.5 : null,
  };
}

function clientWithStatuses(statuses: JobSummary[]): ApiClient {
  let i = 0;
  return {
    getJob: vi.fn(async () => statuses[Math.min(i++, statuses.length - 1)]),
  } as unknown as ApiClient;
}

describe('pollJob', () => {
  it('resolves once the job is done and reports intermediate states', async () => {
    const client = clientWithStatuses([summary('queued'), summary('running'), summary('done')]);
    const seen: string[] = [];
    const job = await pollJob(client, 'job1', {
      intervalMs: 1,
      onUpdate: (j) => seen.push(j.status),
    });
    expect(job.status).toBe('done');
    expect(seen).toEqual(['queued', 'running', 'done']);
  });

  it('rejects with the job error on failure', async () => {
    const client = clientWithStatuses([summary('running'), summary('failed', 'boom')]);
    await expect(pollJob(client, 'job1', { intervalMs: 1 })).rejects.toThrow('boom');
  });

  it('times out when the job never finishes', async () => {
    const client = clientWithStatuses([summary('running')]);
    await expect(
      pollJob(client, 'job1', { intervalMs: 1, timeoutMs: 15 }),
    ).rejects.toThrow(/timed out/);
  });
});
