/** Client-side session state and its invariants.
 *
 * Boxes are stored in image coordinates, only drawable on the first frame for
 * tracking, and cleared whenever new files are uploaded. Completed runs are
 * kept so the comparison panel can show the previous one next to the latest.
 */

import type { Box, RunRecord, Task, UploadedImage } from './types.js';

export class UISession {
  task: Task = 'segmentation';
  files: UploadedImage[] = [];
  boxes: Box[] = [];
  activeJobId: string | null = null;
  results: RunRecord[] = [];
  frameIndex = 0;
  showAttention = false;
  showTrajectories = true;

  setTask(task: Task): void {
    this.task = task;
  }

  setFiles(files: UploadedImage[]): void {
    this.files = files;
    this.boxes = []; // new upload invalidates previous annotations
    this.frameIndex = 0;
  }

  /** Tracking accepts exemplars only on the first frame. */
  canAnnotate(frameIndex: number = this.frameIndex): boolean {
    if (this.files.length === 0) return false;
    return this.task !== 'tracking' || frameIndex === 0;
  }

  addBox(box: Box, frameIndex: number = this.frameIndex): boolean {
    if (!this.canAnnotate(frameIndex)) return false;
    this.boxes.push(box);
    return true;
  }

  clearBoxes(): void {
    this.boxes = [];
  }

  get mode(): 'S' | 'A' {
    return this.boxes.length > 0 ? 'S' : 'A';
  }

  recordRun(run: RunRecord): void {
    this.results.push(run);
    this.activeJobId = null;
  }

  /** The latest run and, when available, the one before it. */
  lastTwoRuns(): RunRecord[] {
    return this.results.slice(-2);
  }
}
