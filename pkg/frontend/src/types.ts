export type Task = 'segmentation' | 'tracking' | 'counting';

export interface Box {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

export type JobStatus = 'queued' | 'running' | 'done' | 'failed';

export interface JobSummary {
  id: string;
  task: Task;
  mode: 'S' | 'A';
  status: JobStatus;
  boxes: number[][];
  seed: number;
  inputs: string[];
  results: string[];
  error: string | null;
  timings_ms: number | null;
}

export interface UploadedImage {
  name: string;
  data: Blob;
  width: number;
  height: number;
  url: string; // object URL for display
}

/** One completed analysis kept for side-by-side comparison. */
export interface RunRecord {
  jobId: string;
  task: Task;
  label: string; // e.g. "run 2 (S, 3 boxes)"
  summary: JobSummary;
}
