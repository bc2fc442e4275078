import { describe, expect, it } from "vitest";

import {
  klDivergence,
  matrixSum,
  rowNormalized,
  softAssign,
  studentKernel,
  targetDist,
} from "../src/kernels";
import { Rng } from "../src/rng";

describe("soft assignment", () => {
  it("matches the kernel arithmetic on a single point", () => {
    // distances 0 and 1 give kernels 1 and 1/2 -> (2/3, 1/3)
    const q = softAssign([[0, 0]], [[0, 0], [1, 0]]);
    expect(q[0][0]).toBeCloseTo(2 / 3, 12);
    expect(q[0][1]).toBeCloseTo(1 / 3, 12);
  });

  it("is uniform for equidistant centers", () => {
    const q = softAssign([[0, 0]], [[1, 0], [-1, 0], [0, 1], [0, -1]]);
    for (const v of q[0]) expect(v).toBeCloseTo(0.25, 12);
  });

  it("sums to one over the whole matrix", () => {
    const rng = new Rng(5);
    const z = Array.from({ length: 40 }, () => [rng.gaussian(), rng.gaussian(), rng.gaussian()]);
    const psi = Array.from({ length: 3 }, () => [rng.gaussian(), rng.gaussian(), rng.gaussian()]);
    const q = softAssign(z, psi);
    expect(matrixSum(q)).toBeCloseTo(1.0, 10);
  });

  it("matches a longhand evaluation", () => {
    const rng = new Rng(9);
    const z = Array.from({ length: 7 }, () => [rng.gaussian(), rng.gaussian()]);
    const psi = Array.from({ length: 2 }, () => [rng.gaussian(), rng.gaussian()]);
    const q = softAssign(z, psi);
    for (let t = 0; t < z.length; t++) {
      const kernels = psi.map((c) => {
        const d2 = (z[t][0] - c[0]) ** 2 + (z[t][1] - c[1]) ** 2;
        return 1 / (1 + d2);
      });
      const total = kernels[0] + kernels[1];
      for (let n = 0; n < 2; n++) {
        expect(q[t][n]).toBeCloseTo(kernels[n] / total / z.length, 10);
      }
    }
  });
});

describe("target distribution", () => {
  it("sums to one over the whole matrix", () => {
    const rng = new Rng(2);
    const z = Array.from({ length: 25 }, () => [rng.gaussian(), rng.gaussian()]);
    const psi = [[0, 0], [2, 2], [-2, 1]];
    const p = targetDist(softAssign(z, psi));
    expect(matrixSum(p)).toBeCloseTo(1.0, 10);
  });

  it("equals the assignment for a single sample", () => {
    const q = softAssign([[0.3, -0.2]], [[0, 0], [1, 1], [2, 0]]);
    const p = targetDist(q);
    for (let n = 0; n < 3; n++) expect(p[0][n]).toBeCloseTo(q[0][n], 12);
  });

  it("sharpens concentrated rows", () => {
    const q = softAssign(
      [[0, 0], [0.1, 0], [3, 0]],
      [[0, 0], [3, 0]],
    );
    const p = targetDist(q);
    const qRows = rowNormalized(q);
    const pRows = rowNormalized(p);
    expect(Math.max(...pRows[0])).toBeGreaterThan(Math.max(...qRows[0]));
  });
});

describe("divergence", () => {
  it("is zero between identical distributions", () => {
    const q = softAssign([[0, 1], [1, 0]], [[0, 0], [1, 1]]);
    const p = targetDist(q);
    expect(klDivergence(p, p)).toBe(0);
    expect(klDivergence(q, q)).toBe(0);
  });

  it("is positive between the target and the assignment", () => {
    const q = softAssign([[0, 1], [1, 0], [4, 4]], [[0, 0], [4, 4]]);
    const p = targetDist(q);
    expect(klDivergence(p, q)).toBeGreaterThan(0);
  });
});

describe("student kernel", () => {
  it("never vanishes", () => {
    const k = studentKernel([[100, 100]], [[0, 0]]);
    expect(k[0][0]).toBeGreaterThan(0);
  });
});
