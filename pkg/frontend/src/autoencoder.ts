/**
 * Denoising autoencoder with a cluster-association head.
 *
 * Training follows the two-phase schedule: reconstruction-only pretraining
 * on corrupted inputs (Gaussian noise plus input dropout), then alternating
 * self-trained clustering where every `refreshEvery` steps the target
 * distribution and hard labels are recomputed from the full data, and the
 * steps in between minimize reconstruction + KL(P || Q) on minibatches.
 * Training stops once the fraction of changed labels falls below
 * `stopDelta`.
 *
 * All randomness (weight init, corruption, batch order) is drawn from a
 * seeded generator, so a fixed seed reproduces labels exactly.
 */

import * as tf from "@tensorflow/tfjs";

import { Matrix, argmaxRow, klDivergence, rowNormalized, softAssign, studentKernel, targetDist } from "./kernels";
import { kmeans } from "./kmeans";
import { Rng } from "./rng";

export interface TrainConfig {
  frames: number;
  latentDim: number;
  hiddenDim: number;
  seed: number;
  noiseStd: number;
  dropout: number;
  learningRate: number;
  pretrainEpochs: number;
  batchSize: number;
  maxIters: number;
  refreshEvery: number; // recompute targets/labels every this many steps
  stopDelta: number; // stop when the label-change fraction drops below this
  confidenceThreshold: number; // rows below it are flagged ambiguous
}

export const DEFAULT_TRAIN: TrainConfig = {
  frames: 2,
  latentDim: 8,
  hiddenDim: 32,
  seed: 0,
  noiseStd: 0.05,
  dropout: 0.1,
  learningRate: 0.01,
  pretrainEpochs: 60,
  batchSize: 64,
  maxIters: 400,
  refreshEvery: 20,
  stopDelta: 0.001,
  confidenceThreshold: 0.6,
};

export interface TrainResult {
  labels: number[]; // 0-based cluster index per record
  confidences: number[]; // max row-normalized assignment per record
  ambiguous: boolean[];
  centers: Matrix;
  latent: Matrix;
  lossTrace: number[]; // full-data loss at each refresh boundary
  converged: boolean;
}

class Dense {
  w: tf.Variable;
  b: tf.Variable;

  constructor(fanIn: number, fanOut: number, rng: Rng) {
    const scale = Math.sqrt(2.0 / (fanIn + fanOut));
    this.w = tf.variable(tf.tensor2d(rng.fill(fanIn * fanOut, scale), [fanIn, fanOut]));
    this.b = tf.variable(tf.zeros([fanOut]));
  }

  apply(x: tf.Tensor2D, activation: "tanh" | "linear"): tf.Tensor2D {
    const y = tf.add(tf.matMul(x, this.w as tf.Tensor2D), this.b) as tf.Tensor2D;
    return activation === "tanh" ? (tf.tanh(y) as tf.Tensor2D) : y;
  }

  vars(): tf.Variable[] {
    return [this.w, this.b];
  }
}

export class FramingAutoencoder {
  enc1: Dense;
  enc2: Dense;
  dec1: Dense;
  dec2: Dense;

  constructor(inputDim: number, hiddenDim: number, latentDim: number, rng: Rng) {
    this.enc1 = new Dense(inputDim, hiddenDim, rng);
    this.enc2 = new Dense(hiddenDim, latentDim, rng);
    this.dec1 = new Dense(latentDim, hiddenDim, rng);
    this.dec2 = new Dense(hiddenDim, inputDim, rng);
  }

  encode(x: tf.Tensor2D): tf.Tensor2D {
    return this.enc2.apply(this.enc1.apply(x, "tanh"), "linear");
  }

  decode(z: tf.Tensor2D): tf.Tensor2D {
    return this.dec2.apply(this.dec1.apply(z, "tanh"), "linear");
  }

  vars(): tf.Variable[] {
    return [...this.enc1.vars(), ...this.enc2.vars(), ...this.dec1.vars(), ...this.dec2.vars()];
  }

  encodeMatrix(x: Matrix): Matrix {
    return tf.tidy(() => {
      const z = this.encode(tf.tensor2d(x));
      return z.arraySync() as Matrix;
    });
  }
}

function corrupt(batch: Matrix, rng: Rng, noiseStd: number, dropout: number): Matrix {
  return batch.map((row) =>
    row.map((v) => {
      const kept = rng.next() >= dropout ? v : 0.0;
      return kept + rng.gaussian() * noiseStd;
    }),
  );
}

/** In-graph soft assignment rows (row-stochastic; the 1/T factor cancels in KL). */
function qRows(z: tf.Tensor2D, psi: tf.Variable): tf.Tensor2D {
  const diff = tf.sub(tf.expandDims(z, 1), tf.expandDims(psi as tf.Tensor2D, 0));
  const d2 = tf.sum(tf.square(diff), 2);
  const kernel = tf.div(1.0, tf.add(1.0, d2));
  const norm = tf.sum(kernel, 1, true);
  return tf.div(kernel, norm) as tf.Tensor2D;
}

export function trainDec(data: Matrix, config: TrainConfig): TrainResult {
  if (config.frames < 2) throw new Error("need at least two frames");
  if (!(config.stopDelta > 0 && config.stopDelta < 1)) throw new Error("stopDelta must lie in (0, 1)");
  if (!(config.confidenceThreshold > 0 && config.confidenceThreshold <= 1)) {
    throw new Error("confidenceThreshold must lie in (0, 1]");
  }
  const T = data.length;
  const dim = data[0].length;
  const rng = new Rng(config.seed >>> 0 || 1);
  const ae = new FramingAutoencoder(dim, config.hiddenDim, config.latentDim, rng);
  const optimizer = tf.train.adam(config.learningRate);

  const batchOf = (indices: number[]): Matrix => indices.map((i) => data[i]);

  // ---- pretrain: denoising reconstruction only
  for (let epoch = 0; epoch < config.pretrainEpochs; epoch++) {
    const order = rng.shuffle(T);
    for (let start = 0; start < T; start += config.batchSize) {
      const idx = order.slice(start, start + config.batchSize);
      const clean = batchOf(idx);
      const noisy = corrupt(clean, rng, config.noiseStd, config.dropout);
      optimizer.minimize(() => {
        const x = tf.tensor2d(clean);
        const xn = tf.tensor2d(noisy);
        const recon = ae.decode(ae.encode(xn));
        return tf.mean(tf.sum(tf.square(tf.sub(recon, x)), 1)) as tf.Scalar;
      }, false, ae.vars());
    }
  }

  // ---- initialize cluster centers in latent space
  const latent0 = ae.encodeMatrix(data);
  const psi = tf.variable(tf.tensor2d(kmeans(latent0, config.frames, rng)));
  const clusterVars = [...ae.vars(), psi];

  let labels = softAssign(latent0, psi.arraySync() as Matrix).map(argmaxRow);
  let pFull: Matrix = [];
  const lossTrace: number[] = [];
  let converged = false;

  const fullLoss = (pMat: Matrix): number => {
    const z = ae.encodeMatrix(data);
    const recon = tf.tidy(() => {
      const x = tf.tensor2d(data);
      const out = ae.decode(ae.encode(x));
      return (tf.mean(tf.sum(tf.square(tf.sub(out, x)), 1)) as tf.Scalar).arraySync() as number;
    });
    const q = softAssign(z, psi.arraySync() as Matrix);
    return recon + klDivergence(pMat, q);
  };

  for (let step = 0; step < config.maxIters; step++) {
    if (step % config.refreshEvery === 0) {
      const z = ae.encodeMatrix(data);
      const q = softAssign(z, psi.arraySync() as Matrix);
      pFull = targetDist(q);
      const newLabels = q.map(argmaxRow);
      const changed = newLabels.filter((l, i) => l !== labels[i]).length / T;
      lossTrace.push(fullLoss(pFull));
      labels = newLabels;
      if (step > 0 && changed < config.stopDelta) {
        converged = true;
        break;
      }
      continue;
    }
    const idx = Array.from({ length: Math.min(config.batchSize, T) }, () => rng.int(T));
    const clean = batchOf(idx);
    const noisy = corrupt(clean, rng, config.noiseStd, config.dropout);
    const pRows = rowNormalized(idx.map((i) => pFull[i]));
    optimizer.minimize(() => {
      const x = tf.tensor2d(clean);
      const xn = tf.tensor2d(noisy);
      const zB = ae.encode(xn);
      const recon = tf.mean(tf.sum(tf.square(tf.sub(ae.decode(zB), x)), 1));
      const q = qRows(ae.encode(x), psi);
      const p = tf.tensor2d(pRows);
      const kl = tf.mean(tf.sum(tf.mul(p, tf.sub(tf.log(p), tf.log(q))), 1));
      return tf.add(recon, kl) as tf.Scalar;
    }, false, clusterVars);
  }

  const latent = ae.encodeMatrix(data);
  const centers = psi.arraySync() as Matrix;
  const qFinal = rowNormalized(studentKernel(latent, centers));
  const finalLabels = qFinal.map(argmaxRow);
  const confidences = qFinal.map((row) => Math.max(...row));
  const ambiguous = confidences.map((c) => !(c > config.confidenceThreshold));
  psi.dispose();
  return {
    labels: finalLabels,
    confidences,
    ambiguous,
    centers,
    latent,
    lossTrace,
    converged,
  };
}
