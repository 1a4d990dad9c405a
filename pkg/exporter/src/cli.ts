#!/usr/bin/env node
/**
 * Export a VTDK1 dump from a model forward pass.
 *
 * Frames come from --frames-dir (binary PPMs, sorted by name) or from
 * the seeded synthetic video generator. --reverse and --repeat-single
 * reorder the sampled sequence before segmentation.
 *
 * Exit codes: 0 success, 2 flag errors, 1 anything else.
 */

import * as fs from "node:fs";

import { DEFAULT_SPEC, ExportSpec, HeadAggregation, runExport } from "./export.js";
import {
  FrameImage,
  readFramesDir,
  repeatSingle,
  reverseFrames,
  syntheticVideo,
} from "./frames.js";
import { dumpByteLength, encodeDump } from "./vtdk.js";

interface CliOptions {
  spec: ExportSpec;
  framesDir: string | null;
  videoSeed: number;
  reverse: boolean;
  repeatSingle: number | null;
  output: string;
}

class FlagError extends Error {}

const USAGE = `usage: export-dump [options] -o OUT.vtdk
  --model NAME             model identifier (default toy-vlm)
  --layer K                attention layer, 1-based (default 3)
  --segments G             segment count (default 4)
  --frames-per-segment F   frames per segment (default 5)
  --frame-tokens HxW       token grid per frame (default 24x24)
  --patch-size N           pixels per token side (default 4)
  --query TEXT             query prompt (required)
  --head-agg mean|max      head aggregation (default mean)
  --raw-scores             export unnormalized softmax numerators
  --model-seed N           weight initialization seed (default 1)
  --frames-dir DIR         read .ppm frames instead of synthesizing
  --video-seed N           synthetic video seed (default 0)
  --reverse                reverse frame order before segmenting
  --repeat-single I        repeat frame I over the whole sequence
  -o, --output PATH        output dump path (required)`;

function parseArgs(argv: string[]): CliOptions {
  const spec: ExportSpec = { ...DEFAULT_SPEC, query: "" };
  let framesDir: string | null = null;
  let videoSeed = 0;
  let reverse = false;
  let repeat: number | null = null;
  let output: string | null = null;

  const takeValue = (flag: string, i: number): string => {
    if (i + 1 >= argv.length) throw new FlagError(`${flag} needs a value`);
    return argv[i + 1];
  };
  const takeInt = (flag: string, i: number): number => {
    const value = parseInt(takeValue(flag, i), 10);
    if (!Number.isFinite(value)) throw new FlagError(`${flag} needs an integer`);
    return value;
  };

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    switch (arg) {
      case "--model":
        spec.model = takeValue(arg, i++);
        break;
      case "--layer":
        spec.layer = takeInt(arg, i++);
        break;
      case "--segments":
        spec.segments = takeInt(arg, i++);
        break;
      case "--frames-per-segment":
        spec.framesPerSegment = takeInt(arg, i++);
        break;
      case "--frame-tokens": {
        const parts = takeValue(arg, i++).toLowerCase().split("x");
        const rows = parseInt(parts[0], 10);
        const cols = parseInt(parts[1], 10);
        if (parts.length !== 2 || !(rows > 0) || !(cols > 0)) {
          throw new FlagError("--frame-tokens expects HxW with positive integers");
        }
        spec.tokenRows = rows;
        spec.tokenCols = cols;
        break;
      }
      case "--patch-size":
        spec.patchSize = takeInt(arg, i++);
        break;
      case "--query":
        spec.query = takeValue(arg, i++);
        break;
      case "--head-agg": {
        const how = takeValue(arg, i++);
        if (how !== "mean" && how !== "max") {
          throw new FlagError("--head-agg must be mean or max");
        }
        spec.headAggregation = how as HeadAggregation;
        break;
      }
      case "--raw-scores":
        spec.postSoftmax = false;
        break;
      case "--model-seed":
        spec.modelSeed = takeInt(arg, i++);
        break;
      case "--frames-dir":
        framesDir = takeValue(arg, i++);
        break;
      case "--video-seed":
        videoSeed = takeInt(arg, i++);
        break;
      case "--reverse":
        reverse = true;
        break;
      case "--repeat-single":
        repeat = takeInt(arg, i++);
        break;
      case "-o":
      case "--output":
        output = takeValue(arg, i++);
        break;
      case "-h":
      case "--help":
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        throw new FlagError(`unknown flag ${arg}`);
    }
  }
  if (!output) throw new FlagError("-o/--output is required");
  if (!spec.query) throw new FlagError("--query is required");
  for (const [name, value] of Object.entries({
    layer: spec.layer,
    segments: spec.segments,
    "frames-per-segment": spec.framesPerSegment,
    "patch-size": spec.patchSize,
  })) {
    if (value < 1) throw new FlagError(`--${name} must be >= 1`);
  }
  return { spec, framesDir, videoSeed, reverse, repeatSingle: repeat, output };
}

export function gatherFrames(options: CliOptions): FrameImage[] {
  const total = options.spec.segments * options.spec.framesPerSegment;
  let frames: FrameImage[];
  if (options.framesDir) {
    frames = readFramesDir(options.framesDir);
    if (frames.length < total) {
      throw new Error(
        `${options.framesDir} holds ${frames.length} frames, need ${total}`,
      );
    }
    frames = frames.slice(0, total);
  } else {
    frames = syntheticVideo(
      options.videoSeed,
      total,
      options.spec.tokenCols * options.spec.patchSize,
      options.spec.tokenRows * options.spec.patchSize,
    );
  }
  if (options.reverse) frames = reverseFrames(frames);
  if (options.repeatSingle !== null) frames = repeatSingle(frames, options.repeatSingle);
  return frames;
}

export function main(argv: string[]): number {
  let options: CliOptions;
  try {
    options = parseArgs(argv);
  } catch (err) {
    if (err instanceof FlagError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    throw err;
  }
  try {
    const frames = gatherFrames(options);
    const dump = runExport(frames, options.spec);
    fs.writeFileSync(options.output, encodeDump(dump));
    console.log(
      `wrote ${options.output}: ${dump.segments} segments x ${dump.segmentLen} frames ` +
        `of ${dump.height}x${dump.width} tokens, embed_dim=${dump.embedDim}, ` +
        `${dumpByteLength(dump)} bytes, post_softmax=${dump.postSoftmax}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
