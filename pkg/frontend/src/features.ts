/**
 * Framing-record ingestion and feature assembly.
 *
 * A record carries an item id plus framing information: precomputed numeric
 * descriptors (e.g. downsampled thumbnail statistics) and/or a title whose
 * first eight normalized words are hashed into a fixed-width vector.  The
 * hashing vectorizer keeps the pipeline free of downloaded embeddings; the
 * word normalizer is a lightweight suffix-stripping stand-in for a full
 * lemmatizer.
 */

import * as fs from "fs";

export const MAX_TITLE_WORDS = 8;

export interface FramingRecord {
  itemId: string;
  features?: number[];
  title?: string;
}

const SUFFIXES = ["ings", "ing", "edly", "ed", "ies", "es", "s"];

export function normalizeWord(word: string): string {
  let w = word.toLowerCase().replace(/[^a-z0-9]/g, "");
  for (const suf of SUFFIXES) {
    if (w.length > suf.length + 2 && w.endsWith(suf)) {
      w = w.slice(0, w.length - suf.length);
      break;
    }
  }
  return w;
}

export function titleTokens(title: string): string[] {
  return title
    .split(/\s+/)
    .filter((w) => w.length > 0)
    .slice(0, MAX_TITLE_WORDS)
    .map(normalizeWord)
    .filter((w) => w.length > 0);
}

function hashString(s: string): number {
  let h = 2166136261 >>> 0; // FNV-1a
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 16777619) >>> 0;
  }
  return h >>> 0;
}

/** Signed feature hashing of the (at most eight) title tokens. */
export function hashTokens(tokens: string[], dim: number): number[] {
  const out = new Array<number>(dim).fill(0);
  for (const tok of tokens) {
    const h = hashString(tok);
    const sign = (h & 1) === 0 ? 1 : -1;
    out[(h >>> 1) % dim] += sign;
  }
  const norm = Math.sqrt(out.reduce((a, b) => a + b * b, 0));
  return norm > 0 ? out.map((v) => v / norm) : out;
}

export function recordVector(rec: FramingRecord, hashDim: number): number[] {
  const parts: number[] = [];
  if (rec.features) parts.push(...rec.features);
  if (rec.title !== undefined) parts.push(...hashTokens(titleTokens(rec.title), hashDim));
  if (parts.length === 0) {
    throw new Error(`record ${rec.itemId}: no features or title`);
  }
  return parts;
}

function parseCsvLine(line: string): string[] {
  // simple CSV splitter: fields here never contain quoted commas
  return line.split(",").map((f) => f.trim());
}

export function readRecordsCsv(path: string): FramingRecord[] {
  const lines = fs.readFileSync(path, "utf-8").split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) throw new Error(`${path}: no data rows`);
  const header = parseCsvLine(lines[0]);
  const idCol = header.indexOf("item_id");
  const featCol = header.indexOf("features");
  const titleCol = header.indexOf("title");
  if (idCol < 0 || (featCol < 0 && titleCol < 0)) {
    throw new Error(`${path}: expected columns item_id plus features and/or title`);
  }
  return lines.slice(1).map((line) => {
    const cells = parseCsvLine(line);
    const rec: FramingRecord = { itemId: cells[idCol] };
    if (featCol >= 0 && cells[featCol]) {
      rec.features = cells[featCol].split(";").map(Number);
      if (rec.features.some((v) => !Number.isFinite(v))) {
        throw new Error(`${path}: non-numeric feature for item ${rec.itemId}`);
      }
    }
    if (titleCol >= 0 && cells[titleCol]) rec.title = cells[titleCol];
    return rec;
  });
}

export function readRecordsJsonl(path: string): FramingRecord[] {
  return fs
    .readFileSync(path, "utf-8")
    .split(/\r?\n/)
    .filter((l) => l.trim().length > 0)
    .map((line) => {
      const raw = JSON.parse(line);
      return { itemId: String(raw.item_id), features: raw.features, title: raw.title };
    });
}

/** Assemble the design matrix; all rows must agree on dimension. */
export function buildMatrix(records: FramingRecord[], hashDim = 16): number[][] {
  const rows = records.map((r) => recordVector(r, hashDim));
  const dim = rows[0].length;
  rows.forEach((row, i) => {
    if (row.length !== dim) {
      throw new Error(`record ${records[i].itemId}: feature length ${row.length} != ${dim}`);
    }
  });
  return rows;
}
