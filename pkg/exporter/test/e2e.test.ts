/**
 * End-to-end conformance: exported dumps must be consumable by the
 * compression engine through its public interfaces (VTDK1 bytes and
 * the `vtcomp` CLI), including the reversed and repeated-frame
 * sequence protocols.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ExportSpec, runExport } from "../src/export.js";
import { repeatSingle, reverseFrames, syntheticVideo } from "../src/frames.js";
import { encodeDump } from "../src/vtdk.js";

const PYTHON = process.env.PYTHON ?? "python3";

function vtcomp(...args: string[]) {
  return spawnSync(PYTHON, ["-m", "vtcomp.cli", ...args], { encoding: "utf8" });
}

let workDir: string;

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "vtdk-e2e-"));
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

const SPEC: ExportSpec = {
  model: "toy-vlm",
  layer: 3,
  segments: 4,
  framesPerSegment: 2,
  tokenRows: 8,
  tokenCols: 8,
  patchSize: 2,
  query: "what is moving?",
  headAggregation: "mean",
  postSoftmax: true,
  modelSeed: 1,
};

function exportTo(name: string, transform?: "reverse" | "repeat"): string {
  let frames = syntheticVideo(
    5,
    SPEC.segments * SPEC.framesPerSegment,
    SPEC.tokenCols * SPEC.patchSize,
    SPEC.tokenRows * SPEC.patchSize,
  );
  if (transform === "reverse") frames = reverseFrames(frames);
  if (transform === "repeat") frames = repeatSingle(frames, 0);
  const dump = runExport(frames, SPEC);
  const file = path.join(workDir, name);
  fs.writeFileSync(file, encodeDump(dump));
  return file;
}

describe("engine interoperability", () => {
  it("engine validates and analyzes an exported dump", () => {
    const file = exportTo("plain.vtdk");
    const prefix = path.join(workDir, "plain");
    const result = vtcomp(
      "analyze-bias", file, "--top-fraction", "0.25", "--selector", "topk",
      "-o", prefix,
    );
    expect(result.stderr).toBe("");
    expect(result.status).toBe(0);
    const report = JSON.parse(fs.readFileSync(`${prefix}.bias.json`, "utf8"));
    expect(report.frames).toBe(SPEC.framesPerSegment);
    expect(report.k).toBe(Math.round(0.25 * 2 * 8 * 8));
    const counts: number[] = report.counts;
    expect(counts.reduce((a, b) => a + b, 0)).toBeCloseTo(report.k, 6);
    expect(fs.existsSync(`${prefix}.heatmap.csv`)).toBe(true);
  });

  it("grid selection on exported attention is exactly uniform", () => {
    const file = exportTo("grid.vtdk");
    const prefix = path.join(workDir, "grid");
    const result = vtcomp(
      "analyze-bias", file, "--selector", "gapool", "--grid", "2x2", "-o", prefix,
    );
    expect(result.status).toBe(0);
    const report = JSON.parse(fs.readFileSync(`${prefix}.bias.json`, "utf8"));
    expect(report.shares).toEqual([0.5, 0.5]);
  });

  it("reversed and repeated-frame protocol dumps flow end to end", () => {
    for (const transform of ["reverse", "repeat"] as const) {
      const file = exportTo(`${transform}.vtdk`, transform);
      const prefix = path.join(workDir, transform);
      const result = vtcomp("analyze-bias", file, "--k", "32", "-o", prefix);
      expect(result.stderr).toBe("");
      expect(result.status).toBe(0);
    }
  });

  it("engine compresses an exported dump with matching counts", () => {
    const file = exportTo("compress.vtdk");
    const out = path.join(workDir, "compress.vtsq");
    const stats = path.join(workDir, "compress.stats.json");
    const result = vtcomp(
      "compress", file, "--grid", "2x2", "--pool", "2x2", "-o", out, "--stats", stats,
    );
    expect(result.stderr).toBe("");
    expect(result.status).toBe(0);
    const payload = JSON.parse(fs.readFileSync(stats, "utf8"));
    // 4 segments x 2 frames x 16 cells, plus 4x2 frames x 4 summary tokens
    expect(payload.compressed).toBe(128);
    expect(payload.summary).toBe(32);
    expect(payload.total).toBe(160);
    expect(fs.statSync(out).size).toBeGreaterThan(0);
  });
});
