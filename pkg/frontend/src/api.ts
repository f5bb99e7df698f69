/** Thin client for the analysis service REST API. */

import type { Box, JobSummary, Task } from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchFn: typeof fetch = globalThis.fetch?.bind(globalThis),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async submitJob(
    task: Task,
    images: { name: string; data: Blob }[],
    boxes: Box[],
    seed: number,
  ): Promise<{ id: string }> {
    const form = new FormData();
    form.append('task', task);
    form.append('seed', String(seed));
    if (boxes.length > 0) {
      form.append('boxes', JSON.stringify(boxes.map((b) => [b.x0, b.y0, b.w, b.h])));
    }
    for (const img of images) {
      form.append('images', img.data, img.name);
    }
    const resp = await this.fetchFn(this.url('/api/jobs'), { method: 'POST', body: form });
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeError(resp));
    }
    return (await resp.json()) as { id: string };
  }

  async getJob(id: string): Promise<JobSummary> {
    const resp = await this.fetchFn(this.url(`/api/jobs/${id}`));
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeError(resp));
    }
    return (await resp.json()) as JobSummary;
  }

  /** URL of one result file (overlay PNG, JSON, ...). */
  fileUrl(id: string, path: string): string {
    return this.url(`/api/jobs/${id}/files/${path}`);
  }

  /** URL of the downloadable result archive. */
  resultUrl(id: string): string {
    return this.url(`/api/jobs/${id}/result`);
  }

  async getJson<T>(id: string, path: string): Promise<T> {
    const resp = await this.fetchFn(this.fileUrl(id, path));
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeError(resp));
    }
    return (await resp.json()) as T;
  }
}

async function describeError(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === 'string') return body.detail;
    if (body.detail && typeof body.detail === 'object') {
      const d = body.detail as { field?: string; message?: string };
      if (d.message) return d.field ? `${d.field}: ${d.message}` : d.message;
    }
  } catch {
    /* non-JSON body */
  }
  return `request failed with status ${resp.status}`;
}
