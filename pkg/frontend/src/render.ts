/** Result rendering: one panel per finished run.
 *
 * counting      -> density heatmap plus the float/integer counts;
 * segmentation  -> instance overlay (random colors assigned server-side),
 *                  optional per-image AP line when ground truth was uploaded;
 * tracking      -> frame scrubber over per-frame labeled masks plus the
 *                  trajectory overlay.
 * Every panel gets download links for the raw outputs and an "advanced"
 * toggle revealing the attention-map view when the run produced one.
 */

import type { ApiClient } from './api.js';
import type { JobSummary } from './types.js';

export interface TrajectoryData {
  n_frames: number;
  tracks: { label: number; parent: number; points: { t: number; x: number; y: number }[] }[];
}

export interface CountData {
  count_float: number;
  count_int: number;
}

export interface RenderExtras {
  /** Pre-computed AP@0.5 against user-provided ground truth, if any. */
  apAtHalf?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function downloadLinks(doc: Document, client: ApiClient, job: JobSummary): HTMLElement {
  const bar = el(doc, 'div', 'downloads');
  const all = el(doc, 'a', 'download-link', 'download all (zip)');
  all.setAttribute('href', client.resultUrl(job.id));
  bar.appendChild(all);
  for (const rel of job.results.filter((r) => !r.startsWith('overlays/'))) {
    const a = el(doc, 'a', 'download-link', rel);
    a.setAttribute('href', client.fileUrl(job.id, rel));
    a.setAttribute('download', rel.split('/').pop() ?? rel);
    bar.appendChild(a);
  }
  return bar;
}

function attentionToggle(doc: Document, client: ApiClient, job: JobSummary): HTMLElement {
  const wrap = el(doc, 'div', 'advanced');
  if (!job.results.includes('overlays/attention.png')) {
    return wrap;
  }
  const toggle = el(doc, 'label', 'advanced-toggle');
  const box = el(doc, 'input') as HTMLInputElement;
  box.type = 'checkbox';
  toggle.appendChild(box);
  toggle.appendChild(doc.createTextNode(' show attention map (advanced)'));
  const img = el(doc, 'img', 'attention-map') as HTMLImageElement;
  img.src = client.fileUrl(job.id, 'overlays/attention.png');
  img.style.display = 'none';
  box.addEventListener('change', () => {
    img.style.display = box.checked ? 'block' : 'none';
  });
  wrap.appendChild(toggle);
  wrap.appendChild(img);
  return wrap;
}

async function renderCounting(
  doc: Document,
  client: ApiClient,
  job: JobSummary,
): Promise<HTMLElement> {
  const panel = el(doc, 'div', 'result counting-result');
  const img = el(doc, 'img', 'result-image density-heatmap') as HTMLImageElement;
  img.src = client.fileUrl(job.id, 'overlays/density.png');
  panel.appendChild(img);
  const data = await client.getJson<CountData>(job.id, 'count.json');
  panel.appendChild(
    el(doc, 'div', 'count-line', `count: ${data.count_int} (${data.count_float.toFixed(2)})`),
  );
  return panel;
}

function renderSegmentation(
  doc: Document,
  client: ApiClient,
  job: JobSummary,
  extras: RenderExtras,
): HTMLElement {
  const panel = el(doc, 'div', 'result segmentation-result');
  const img = el(doc, 'img', 'result-image instance-overlay') as HTMLImageElement;
  img.src = client.fileUrl(job.id, 'overlays/instances.png');
  panel.appendChild(img);
  if (extras.apAtHalf !== undefined) {
    panel.appendChild(el(doc, 'div', 'ap-line', `AP@0.5: ${extras.apAtHalf.toFixed(3)}`));
  }
  return panel;
}

async function renderTracking(
  doc: Document,
  client: ApiClient,
  job: JobSummary,
): Promise<HTMLElement> {
  const panel = el(doc, 'div', 'result tracking-result');
  const traj = await client.getJson<TrajectoryData>(job.id, 'trajectories.json');
  const nFrames = traj.n_frames;

  const frame = el(doc, 'img', 'result-image frame-view') as HTMLImageElement;
  const frameUrl = (t: number) =>
    client.fileUrl(job.id, `overlays/frame_${String(t).padStart(3, '0')}.png`);
  frame.src = frameUrl(0);
  panel.appendChild(frame);

  const scrubRow = el(doc, 'div', 'scrubber-row');
  const scrubber = el(doc, 'input', 'frame-scrubber') as HTMLInputElement;
  scrubber.type = 'range';
  scrubber.min = '0';
  scrubber.max = String(nFrames - 1);
  scrubber.value = '0';
  const frameLabel = el(doc, 'span', 'frame-label', `frame 0 / ${nFrames - 1}`);
  scrubber.addEventListener('input', () => {
    frame.src = frameUrl(Number(scrubber.value));
    frameLabel.textContent = `frame ${scrubber.value} / ${nFrames - 1}`;
  });
  scrubRow.appendChild(scrubber);
  scrubRow.appendChild(frameLabel);
  panel.appendChild(scrubRow);

  const trajImg = el(doc, 'img', 'trajectory-overlay') as HTMLImageElement;
  trajImg.src = client.fileUrl(job.id, 'overlays/trajectories.png');
  panel.appendChild(trajImg);
  panel.appendChild(
    el(doc, 'div', 'track-count', `${traj.tracks.length} tracks over ${nFrames} frames`),
  );
  return panel;
}

export async function renderResult(
  doc: Document,
  client: ApiClient,
  job: JobSummary,
  extras: RenderExtras = {},
): Promise<HTMLElement> {
  let panel: HTMLElement;
  if (job.task === 'counting') {
    panel = await renderCounting(doc, client, job);
  } else if (job.task === 'segmentation') {
    panel = renderSegmentation(doc, client, job, extras);
  } else {
    panel = await renderTracking(doc, client, job);
  }
  panel.appendChild(attentionToggle(doc, client, job));
  panel.appendChild(downloadLinks(doc, client, job));
  return panel;
}
