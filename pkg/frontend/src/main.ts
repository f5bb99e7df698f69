/** Page wiring: task picker, upload, canvas annotation, run/poll, results. */

import { ApiClient } from './api.js';
import { ComparePanel } from './compare.js';
import { boxFromDrag, drawBox, type Point, type ViewTransform } from './coords.js';
import { pollJob } from './poll.js';
import { UISession } from './state.js';
import type { Task, UploadedImage } from './types.js';

const doc = document;
const session = new UISession();
const client = new ApiClient('');
const view: ViewTransform = { zoom: 1, panX: 0, panY: 0 };

const taskSelect = doc.getElementById('task') as HTMLSelectElement;
const fileInput = doc.getElementById('files') as HTMLInputElement;
const canvas = doc.getElementById('annotator') as HTMLCanvasElement;
const frameHint = doc.getElementById('frame-hint') as HTMLElement;
const runButton = doc.getElementById('run') as HTMLButtonElement;
const clearButton = doc.getElementById('clear-boxes') as HTMLButtonElement;
const zoomButtons = doc.querySelectorAll<HTMLButtonElement>('[data-zoom]');
const statusLine = doc.getElementById('status') as HTMLElement;
const errorBanner = doc.getElementById('error') as HTMLElement;
const retryButton = doc.getElementById('retry') as HTMLButtonElement;
const compare = new ComparePanel(doc, client);
doc.getElementById('results')!.appendChild(compare.root);

let baseImage: HTMLImageElement | null = null;
let dragStart: Point | null = null;
let runCounter = 0;

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function showError(message: string): void {
  errorBanner.textContent = message;
  errorBanner.style.display = 'block';
  retryButton.style.display = 'inline-block';
}

function clearError(): void {
  errorBanner.style.display = 'none';
  retryButton.style.display = 'none';
}

function redraw(): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (baseImage) {
    ctx.drawImage(
      baseImage,
      view.panX,
      view.panY,
      baseImage.naturalWidth * view.zoom,
      baseImage.naturalHeight * view.zoom,
    );
  }
  for (const box of session.boxes) {
    drawBox(ctx, box, view);
  }
  frameHint.textContent = session.canAnnotate()
    ? `${session.boxes.length} exemplar box(es); drag to add (mode ${session.mode})`
    : 'exemplar boxes go on the first frame only';
}

async function loadFiles(list: FileList): Promise<void> {
  const files: UploadedImage[] = [];
  for (const file of Array.from(list)) {
    const url = URL.createObjectURL(file);
    const img = new Image();
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error(`cannot load ${file.name}`));
      img.src = url;
    });
    files.push({ name: file.name, data: file, width: img.naturalWidth, height: img.naturalHeight, url });
  }
  session.setFiles(files);
  if (files.length > 0) {
    baseImage = new Image();
    baseImage.src = files[0].url;
    await new Promise<void>((resolve) => {
      baseImage!.onload = () => resolve();
    });
    canvas.width = Math.round(files[0].width * view.zoom);
    canvas.height = Math.round(files[0].height * view.zoom);
  }
  redraw();
}

function canvasPoint(ev: MouseEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
}

canvas.addEventListener('mousedown', (ev) => {
  if (!session.canAnnotate()) return;
  dragStart = canvasPoint(ev);
});

canvas.addEventListener('mouseup', (ev) => {
  if (dragStart === null) return;
  const box = boxFromDrag(dragStart, canvasPoint(ev), view);
  dragStart = null;
  if (box !== null) {
    session.addBox(box);
  }
  redraw();
});

for (const button of zoomButtons) {
  button.addEventListener('click', () => {
    view.zoom = Number(button.dataset.zoom);
    if (baseImage) {
      canvas.width = Math.round(baseImage.naturalWidth * view.zoom);
      canvas.height = Math.round(baseImage.naturalHeight * view.zoom);
    }
    redraw();
  });
}

taskSelect.addEventListener('change', () => {
  session.setTask(taskSelect.value as Task);
  redraw();
});

fileInput.addEventListener('change', () => {
  if (fileInput.files) {
    void loadFiles(fileInput.files).catch((err) => showError(String(err)));
  }
});

clearButton.addEventListener('click', () => {
  session.clearBoxes();
  redraw();
});

async function run(): Promise<void> {
  clearError();
  if (session.files.length === 0) {
    showError('upload an image (or frames) first');
    return;
  }
  runButton.disabled = true;
  try {
    const { id } = await client.submitJob(
      session.task,
      session.files.map((f) => ({ name: f.name, data: f.data })),
      session.boxes,
      0,
    );
    session.activeJobId = id;
    setStatus(`job ${id}: submitted`);
    const summary = await pollJob(client, id, {
      intervalMs: 700,
      onUpdate: (job) => setStatus(`job ${id}: ${job.status}`),
    });
    runCounter += 1;
    session.recordRun({
      jobId: id,
      task: summary.task,
      label: `run ${runCounter} (${summary.mode}, ${summary.boxes.length} box(es))`,
      summary,
    });
    await compare.update(session.lastTwoRuns());
    setStatus(`job ${id}: done in ${summary.timings_ms ?? '?'} ms`);
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
  } finally {
    runButton.disabled = false;
  }
}

runButton.addEventListener('click', () => void run());
retryButton.addEventListener('click', () => void run());

// resume polling for an interrupted job if the page reloaded mid-run
const pending = new URLSearchParams(location.search).get('job');
if (pending) {
  setStatus(`resuming job ${pending}`);
  void pollJob(client, pending, { onUpdate: (job) => setStatus(`job ${pending}: ${job.status}`) })
    .then(async (summary) => {
      runCounter += 1;
      session.recordRun({
        jobId: pending,
        task: summary.task,
        label: `run ${runCounter} (resumed)`,
        summary,
      });
      await compare.update(session.lastTwoRuns());
    })
    .catch((err) => showError(String(err)));
}

redraw();
