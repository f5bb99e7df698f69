// @vitest-environment happy-dom
import { describe, expect, it } from 'vitest';

import type { ApiClient } from '../src/api.js';
import { ComparePanel } from '../src/compare.js';
import { renderResult } from '../src/render.js';
import type { JobSummary, RunRecord, Task } from '../src/types.js';

/** Stubbed service: file URLs are synthesized, JSON payloads come from a map. */
function stubClient(json: Record<string, unknown>): ApiClient {
  return {
    fileUrl: (id: string, path: string) => `/stub/${id}/${path}`,
    resultUrl: (id: string) => `/stub/${id}/archive.zip`,
    getJson: async (_id: string, path: string) => {
      if (!(path in json)) throw new Error(`no stub for ${path}`);
      return json[path];
    },
  } as unknown as ApiClient;
}

function jobSummary(task: Task, results: string[], mode: 'S' | 'A' = 'A'): JobSummary {
  return {
    id: `${task}-job`,
    task,
    mode,
    status: 'done',
    boxes: mode === 'S' ? [[10, 10, 20, 20]] : [],
    seed: 0,
    inputs: ['input_000.png'],
    results,
    error: null,
    timings_ms: 42,
  };
}

const COUNT_JOB = jobSummary('counting', [
  'count.json', 'density.tif', 'overlays/density.png', 'overlays/attention.png',
  'run_manifest.json',
]);
const SEG_JOB = jobSummary('segmentation', [
  'labels.tif', 'overlays/instances.png', 'overlays/attention.png', 'run_manifest.json',
], 'S');
const TRACK_JOB = jobSummary('tracking', [
  'res_track.txt', 'mask000.tif', 'mask001.tif', 'mask002.tif', 'trajectories.json',
  'overlays/frame_000.png', 'overlays/frame_001.png', 'overlays/frame_002.png',
  'overlays/trajectories.png', 'run_manifest.json',
]);

const STUB_JSON = {
  'count.json': { count_float: 6.5, count_int: 7 },
  'trajectories.json': {
    n_frames: 3,
    tracks: [
      { label: 1, parent: 0, points: [{ t: 0, x: 1, y: 1 }, { t: 1, x: 2, y: 2 }] },
      { label: 2, parent: 0, points: [{ t: 0, x: 9, y: 9 }] },
    ],
  },
};

describe('renderResult', () => {
  it('renders a counting result with heatmap and both counts', async () => {
    const panel = await renderResult(document, stubClient(STUB_JSON), COUNT_JOB);
    const img = panel.querySelector<HTMLImageElement>('.density-heatmap');
    expect(img?.src).toContain('overlays/density.png');
    expect(panel.querySelector('.count-line')?.textContent).toBe('count: 7 (6.50)');
    expect(panel.querySelector('.downloads')?.textContent).toContain('count.json');
  });

  it('renders a segmentation result with overlay and optional AP line', async () => {
    const panel = await renderResult(document, stubClient(STUB_JSON), SEG_JOB, {
      apAtHalf: 0.875,
    });
    expect(panel.querySelector<HTMLImageElement>('.instance-overlay')?.src)
      .toContain('overlays/instances.png');
    expect(panel.querySelector('.ap-line')?.textContent).toBe('AP@0.5: 0.875');
    const bare = await renderResult(document, stubClient(STUB_JSON), SEG_JOB);
    expect(bare.querySelector('.ap-line')).toBeNull();
  });

  it('renders a tracking result with a working frame scrubber', async () => {
    const panel = await renderResult(document, stubClient(STUB_JSON), TRACK_JOB);
    const scrubber = panel.querySelector<HTMLInputElement>('.frame-scrubber');
    const frame = panel.querySelector<HTMLImageElement>('.frame-view');
    expect(scrubber?.max).toBe('2');
    expect(frame?.src).toContain('frame_000.png');
    scrubber!.value = '2';
    scrubber!.dispatchEvent(new Event('input'));
    expect(frame?.src).toContain('frame_002.png');
    expect(panel.querySelector('.frame-label')?.textContent).toBe('frame 2 / 2');
    expect(panel.querySelector<HTMLImageElement>('.trajectory-overlay')?.src)
      .toContain('overlays/trajectories.png');
    expect(panel.querySelector('.track-count')?.textContent).toBe('2 tracks over 3 frames');
  });

  it('hides the attention map behind the advanced toggle', async () => {
    const panel = await renderResult(document, stubClient(STUB_JSON), SEG_JOB);
    const img = panel.querySelector<HTMLImageElement>('.attention-map');
    const toggle = panel.querySelector<HTMLInputElement>('.advanced-toggle input');
    expect(img?.style.display).toBe('none');
    toggle!.checked = true;
    toggle!.dispatchEvent(new Event('change'));
    expect(img?.style.display).toBe('block');
  });

  it('omits the advanced toggle when no attention map exists', async () => {
    const panel = await renderResult(document, stubClient(STUB_JSON), TRACK_JOB);
    expect(panel.querySelector('.advanced-toggle')).toBeNull();
  });
});

describe('ComparePanel', () => {
  it('shows two runs side by side for exemplar refinement', async () => {
    const client = stubClient(STUB_JSON);
    const panel = new ComparePanel(document, client);
    const runs: RunRecord[] = [
      { jobId: 'a', task: 'counting', label: 'run 1 (A, 0 box(es))', summary: COUNT_JOB },
      {
        jobId: 'b',
        task: 'counting',
        label: 'run 2 (S, 1 box(es))',
        summary: { ...COUNT_JOB, id: 'counting-job-2', mode: 'S' },
      },
    ];
    await panel.update(runs);
    const slots = panel.root.querySelectorAll('.compare-slot');
    expect(slots).toHaveLength(2);
    const labels = [...panel.root.querySelectorAll('.compare-label')].map(
      (n) => n.textContent,
    );
    expect(labels).toEqual(['run 1 (A, 0 box(es))', 'run 2 (S, 1 box(es))']);
    // both runs' rendered results are simultaneously in the document
    expect(panel.root.querySelectorAll('.count-line')).toHaveLength(2);
  });
});
