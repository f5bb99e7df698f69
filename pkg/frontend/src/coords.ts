/** Canvas <-> image coordinate mapping.
 *
 * The canvas shows the image scaled by `zoom` and shifted by a pan offset in
 * canvas pixels. Boxes are always stored in image-space pixels so the server
 * receives coordinates independent of the current view.
 */

import type { Box } from './types.js';

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export interface Point {
  x: number;
  y: number;
}

export function canvasToImage(p: Point, t: ViewTransform): Point {
  return { x: (p.x - t.panX) / t.zoom, y: (p.y - t.panY) / t.zoom };
}

export function imageToCanvas(p: Point, t: ViewTransform): Point {
  return { x: p.x * t.zoom + t.panX, y: p.y * t.zoom + t.panY };
}

const MIN_BOX_PX = 0.5; // image-space; a click without a drag makes no box

/** Convert a drag gesture (canvas coords) into an image-space box, or null
 * for degenerate drags. Handles drags in any direction. */
export function boxFromDrag(start: Point, end: Point, t: ViewTransform): Box | null {
  const a = canvasToImage(start, t);
  const b = canvasToImage(end, t);
  const x0 = Math.min(a.x, b.x);
  const y0 = Math.min(a.y, b.y);
  const w = Math.abs(a.x - b.x);
  const h = Math.abs(a.y - b.y);
  if (w < MIN_BOX_PX || h < MIN_BOX_PX) {
    return null;
  }
  return { x0, y0, w, h };
}

export function boxToCanvas(box: Box, t: ViewTransform): { x: number; y: number; w: number; h: number } {
  const tl = imageToCanvas({ x: box.x0, y: box.y0 }, t);
  return { x: tl.x, y: tl.y, w: box.w * t.zoom, h: box.h * t.zoom };
}

export function drawBox(ctx: CanvasRenderingContext2D, box: Box, t: ViewTransform, color = '#ff3333'): void {
  const r = boxToCanvas(box, t);
  ctx.beginPath();
  ctx.rect(r.x, r.y, r.w, r.h);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.stroke();
}
