/**
 * Cluster-association kernels.
 *
 * The soft assignment of latent point z_t to center Psi_n uses a Student-t
 * kernel (1 + ||z - Psi||^2)^-1, normalized over centers and then by the
 * number of points, so the whole matrix sums to one.  The self-training
 * target sharpens assignments and down-weights crowded clusters:
 * p proportional to q^2 / column-mass, row-normalized, again scaled by 1/T.
 */

export type Matrix = number[][];

export function squaredDistance(a: number[], b: number[]): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

export function studentKernel(z: Matrix, psi: Matrix): Matrix {
  return z.map((row) => psi.map((c) => 1.0 / (1.0 + squaredDistance(row, c))));
}

/** Row-stochastic version of a nonnegative matrix. */
export function rowNormalized(m: Matrix): Matrix {
  return m.map((row) => {
    const s = row.reduce((a, b) => a + b, 0);
    return row.map((v) => v / s);
  });
}

/** Soft assignment q: globally normalized so all entries sum to 1. */
export function softAssign(z: Matrix, psi: Matrix): Matrix {
  const t = z.length;
  return rowNormalized(studentKernel(z, psi)).map((row) => row.map((v) => v / t));
}

/** Self-training target p built from q (same global normalization). */
export function targetDist(q: Matrix): Matrix {
  const t = q.length;
  const n = q[0].length;
  const mass = new Array<number>(n).fill(0);
  for (const row of q) for (let j = 0; j < n; j++) mass[j] += row[j];
  const sharpened = q.map((row) => row.map((v, j) => (v * v) / mass[j]));
  return rowNormalized(sharpened).map((row) => row.map((v) => v / t));
}

/** KL(P || Q) over the full matrices (both sum to one). */
export function klDivergence(p: Matrix, q: Matrix): number {
  let total = 0;
  for (let i = 0; i < p.length; i++) {
    for (let j = 0; j < p[i].length; j++) {
      if (p[i][j] > 0) total += p[i][j] * Math.log(p[i][j] / q[i][j]);
    }
  }
  return total;
}

export function matrixSum(m: Matrix): number {
  return m.reduce((acc, row) => acc + row.reduce((a, b) => a + b, 0), 0);
}

export function argmaxRow(row: number[]): number {
  let best = 0;
  for (let j = 1; j < row.length; j++) if (row[j] > row[best]) best = j;
  return best;
}
