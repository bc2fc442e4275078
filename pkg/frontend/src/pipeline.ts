/**
 * End-to-end frame assignment: framing records in, frame-assignment CSV out.
 *
 * The output file (item_id, frame, confidence, ambiguous) is exactly what
 * the analysis CLI's --frames-file option consumes; frames are numbered from
 * 1 and ambiguous rows are flagged but still assigned their best frame.
 */

import * as fs from "fs";

import { DEFAULT_TRAIN, TrainConfig, TrainResult, trainDec } from "./autoencoder";
import { FramingRecord, buildMatrix, readRecordsCsv, readRecordsJsonl } from "./features";

export interface FrameAssignment {
  itemId: string;
  frame: number; // 1-based
  confidence: number;
  ambiguous: boolean;
}

export interface PipelineResult {
  assignments: FrameAssignment[];
  training: TrainResult;
}

export function assignFrames(
  records: FramingRecord[],
  config: Partial<TrainConfig> = {},
  hashDim = 16,
): PipelineResult {
  const cfg: TrainConfig = { ...DEFAULT_TRAIN, ...config };
  const matrix = buildMatrix(records, hashDim);
  const training = trainDec(matrix, cfg);
  const assignments = records.map((rec, i) => ({
    itemId: rec.itemId,
    frame: training.labels[i] + 1,
    confidence: training.confidences[i],
    ambiguous: training.ambiguous[i],
  }));
  return { assignments, training };
}

export function writeFrameAssignments(assignments: FrameAssignment[], path: string): void {
  const lines = ["item_id,frame,confidence,ambiguous"];
  for (const a of assignments) {
    lines.push(`${a.itemId},${a.frame},${a.confidence.toFixed(6)},${a.ambiguous}`);
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

export function readRecords(path: string): FramingRecord[] {
  return path.endsWith(".jsonl") ? readRecordsJsonl(path) : readRecordsCsv(path);
}
