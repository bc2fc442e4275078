/** Lloyd's algorithm with seeded farthest-point initialization. */

import { Matrix, squaredDistance } from "./kernels";
import { Rng } from "./rng";

export function kmeans(points: Matrix, k: number, rng: Rng, iters = 100): Matrix {
  if (points.length < k) throw new Error(`need at least ${k} points for ${k} centers`);
  const centers: Matrix = [points[rng.int(points.length)].slice()];
  while (centers.length < k) {
    let far = 0;
    let farDist = -1;
    for (let i = 0; i < points.length; i++) {
      const d = Math.min(...centers.map((c) => squaredDistance(points[i], c)));
      if (d > farDist) {
        farDist = d;
        far = i;
      }
    }
    centers.push(points[far].slice());
  }
  const dim = points[0].length;
  for (let it = 0; it < iters; it++) {
    const sums: Matrix = centers.map(() => new Array(dim).fill(0));
    const counts = new Array(k).fill(0);
    for (const p of points) {
      let best = 0;
      for (let c = 1; c < k; c++) {
        if (squaredDistance(p, centers[c]) < squaredDistance(p, centers[best])) best = c;
      }
      counts[best] += 1;
      for (let d = 0; d < dim; d++) sums[best][d] += p[d];
    }
    let moved = 0;
    for (let c = 0; c < k; c++) {
      if (counts[c] === 0) continue; // keep an empty center where it is
      for (let d = 0; d < dim; d++) {
        const v = sums[c][d] / counts[c];
        moved += Math.abs(v - centers[c][d]);
        centers[c][d] = v;
      }
    }
    if (moved < 1e-12) break;
  }
  return centers;
}
