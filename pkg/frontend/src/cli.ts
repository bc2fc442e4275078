#!/usr/bin/env node
/**
 * framer cluster --input records.csv --frames 2 --out frames.csv
 *
 * Clusters framing records into discrete frames and writes the assignment
 * file consumed by the analysis CLI (--frames-file).
 */

import { DEFAULT_TRAIN } from "./autoencoder";
import { assignFrames, readRecords, writeFrameAssignments } from "./pipeline";

interface Args {
  [key: string]: string;
}

function parseArgs(argv: string[]): { command: string; args: Args } {
  const command = argv[0];
  const args: Args = {};
  for (let i = 1; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${argv[i]}`);
    }
    args[argv[i].slice(2)] = argv[i + 1];
  }
  return { command, args };
}

function num(args: Args, key: string, fallback: number): number {
  if (!(key in args)) return fallback;
  const v = Number(args[key]);
  if (!Number.isFinite(v)) throw new Error(`--${key} must be numeric`);
  return v;
}

export function main(argv: string[]): number {
  try {
    const { command, args } = parseArgs(argv);
    if (command !== "cluster") {
      throw new Error(`unknown command ${command ?? "(none)"}; expected: cluster`);
    }
    for (const required of ["input", "out"]) {
      if (!(required in args)) throw new Error(`--${required} is required`);
    }
    const records = readRecords(args.input);
    const { assignments, training } = assignFrames(records, {
      frames: num(args, "frames", DEFAULT_TRAIN.frames),
      latentDim: num(args, "latent-dim", DEFAULT_TRAIN.latentDim),
      hiddenDim: num(args, "hidden-dim", DEFAULT_TRAIN.hiddenDim),
      seed: num(args, "seed", DEFAULT_TRAIN.seed),
      stopDelta: num(args, "delta", DEFAULT_TRAIN.stopDelta),
      confidenceThreshold: num(args, "delta-c", DEFAULT_TRAIN.confidenceThreshold),
      refreshEvery: num(args, "zeta", DEFAULT_TRAIN.refreshEvery),
      pretrainEpochs: num(args, "pretrain-epochs", DEFAULT_TRAIN.pretrainEpochs),
      maxIters: num(args, "iters", DEFAULT_TRAIN.maxIters),
      noiseStd: num(args, "noise", DEFAULT_TRAIN.noiseStd),
    }, num(args, "hash-dim", 16));
    writeFrameAssignments(assignments, args.out);
    const nAmbiguous = assignments.filter((a) => a.ambiguous).length;
    console.log(
      JSON.stringify({
        records: assignments.length,
        frames: new Set(assignments.map((a) => a.frame)).size,
        ambiguous: nAmbiguous,
        converged: training.converged,
        out: args.out,
      }),
    );
    return 0;
  } catch (err) {
    console.error(JSON.stringify({ error: { message: String(err instanceof Error ? err.message : err) } }));
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
