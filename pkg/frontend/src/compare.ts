/** Side-by-side panel for exemplar refinement: re-running with changed boxes
 * keeps the previous result visible next to the new one. */

import type { ApiClient } from './api.js';
import type { RenderExtras } from './render.js';
import { renderResult } from './render.js';
import type { RunRecord } from './types.js';

export class ComparePanel {
  readonly root: HTMLElement;

  constructor(private doc: Document, private client: ApiClient) {
    this.root = doc.createElement('div');
    this.root.className = 'compare-panel';
  }

  /** Show the given runs (typically the latest two) next to each other. */
  async update(runs: RunRecord[], extras: Map<string, RenderExtras> = new Map()): Promise<void> {
    this.root.replaceChildren();
    for (const run of runs) {
      const slot = this.doc.createElement('section');
      slot.className = 'compare-slot';
      const header = this.doc.createElement('h3');
      header.className = 'compare-label';
      header.textContent = run.label;
      slot.appendChild(header);
      slot.appendChild(
        await renderResult(this.doc, this.client, run.summary, extras.get(run.jobId) ?? {}),
      );
      this.root.appendChild(slot);
    }
  }
}
