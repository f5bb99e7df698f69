/** Client-side average precision for the "show AP when ground truth is
 * uploaded" display. Greedy one-to-one matching by descending IoU over pairs
 * strictly above the threshold; AP = TP / (TP + FP + FN). */

export interface LabelMap {
  labels: Int32Array;
  width: number;
  height: number;
}

interface PairStats {
  iou: Map<string, number>; // "gtId:predId" -> IoU
  gtIds: number[];
  predIds: number[];
}

function pairStats(pred: LabelMap, gt: LabelMap): PairStats {
  if (pred.width !== gt.width || pred.height !== gt.height) {
    throw new Error('label maps differ in size');
  }
  const inter = new Map<string, number>();
  const gtArea = new Map<number, number>();
  const predArea = new Map<number, number>();
  const n = gt.labels.length;
  for (let i = 0; i < n; i++) {
    const g = gt.labels[i];
    const p = pred.labels[i];
    if (g > 0) gtArea.set(g, (gtArea.get(g) ?? 0) + 1);
    if (p > 0) predArea.set(p, (predArea.get(p) ?? 0) + 1);
    if (g > 0 && p > 0) {
      const key = `${g}:${p}`;
      inter.set(key, (inter.get(key) ?? 0) + 1);
    }
  }
  const iou = new Map<string, number>();
  for (const [key, overlap] of inter) {
    const [g, p] = key.split(':').map(Number);
    const union = (gtArea.get(g) ?? 0) + (predArea.get(p) ?? 0) - overlap;
    iou.set(key, union > 0 ? overlap / union : 0);
  }
  return { iou, gtIds: [...gtArea.keys()], predIds: [...predArea.keys()] };
}

export function averagePrecisionAt(pred: LabelMap, gt: LabelMap, threshold = 0.5): number {
  const { iou, gtIds, predIds } = pairStats(pred, gt);
  if (gtIds.length === 0 && predIds.length === 0) return 1.0;
  const pairs = [...iou.entries()]
    .filter(([, v]) => v > threshold)
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]));
  const usedGt = new Set<number>();
  const usedPred = new Set<number>();
  let tp = 0;
  for (const [key] of pairs) {
    const [g, p] = key.split(':').map(Number);
    if (usedGt.has(g) || usedPred.has(p)) continue;
    usedGt.add(g);
    usedPred.add(p);
    tp += 1;
  }
  return tp / (gtIds.length + predIds.length - tp);
}
