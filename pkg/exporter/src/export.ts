/**
 * Dump extraction: run the model per segment and collect the attention
 * row of the chosen layer's last query position over visual tokens,
 * plus the projected visual-token embeddings, as a VTDK1 dump.
 */

import { FrameImage, patchFeatures } from "./frames.js";
import { loadModel, ToyVLM } from "./model.js";
import { TokenDump } from "./vtdk.js";

export type HeadAggregation = "mean" | "max";

export interface ExportSpec {
  model: string;
  /** attention layer, 1-based */
  layer: number;
  segments: number;
  framesPerSegment: number;
  tokenRows: number;
  tokenCols: number;
  patchSize: number;
  query: string;
  headAggregation: HeadAggregation;
  /** normalize rows (softmax); false exports the softmax numerators */
  postSoftmax: boolean;
  modelSeed: number;
}

export const DEFAULT_SPEC: Omit<ExportSpec, "query"> = {
  model: "toy-vlm",
  layer: 3,
  segments: 4,
  framesPerSegment: 5,
  tokenRows: 24,
  tokenCols: 24,
  patchSize: 4,
  headAggregation: "mean",
  postSoftmax: true,
  modelSeed: 1,
};

function aggregateHeads(
  rows: Float32Array[],
  how: HeadAggregation,
  length: number,
): Float32Array {
  const out = new Float32Array(length);
  if (how === "mean") {
    for (const row of rows) {
      for (let i = 0; i < length; i++) out[i] += row[i];
    }
    for (let i = 0; i < length; i++) out[i] /= rows.length;
  } else {
    out.fill(-Infinity);
    for (const row of rows) {
      for (let i = 0; i < length; i++) if (row[i] > out[i]) out[i] = row[i];
    }
  }
  return out;
}

export function runExport(frames: FrameImage[], spec: ExportSpec): TokenDump {
  const { segments, framesPerSegment, tokenRows, tokenCols } = spec;
  const total = segments * framesPerSegment;
  if (frames.length !== total) {
    throw new Error(
      `need ${total} frames (${segments} segments x ${framesPerSegment}), got ${frames.length}`,
    );
  }
  const model: ToyVLM = loadModel(spec.model, spec.modelSeed);
  const queryBytes = new TextEncoder().encode(spec.query);
  if (queryBytes.length === 0) {
    throw new Error("query must be non-empty");
  }

  const tokensPerFrame = tokenRows * tokenCols;
  const visualPerSegment = framesPerSegment * tokensPerFrame;
  const embedDim = model.config.dModel;
  const attention = new Float32Array(segments * visualPerSegment);
  const embeddings = new Float32Array(segments * visualPerSegment * embedDim);

  for (let s = 0; s < segments; s++) {
    // projected visual tokens for this segment, frame-major
    const visual = new Float32Array(visualPerSegment * embedDim);
    for (let f = 0; f < framesPerSegment; f++) {
      const frame = frames[s * framesPerSegment + f];
      const features = patchFeatures(frame, tokenRows, tokenCols, spec.patchSize);
      visual.set(
        model.projectPatches(features, tokensPerFrame),
        f * tokensPerFrame * embedDim,
      );
    }
    embeddings.set(visual, s * visualPerSegment * embedDim);

    const capture = model.forwardCapture(visual, visualPerSegment, queryBytes, spec.layer);
    const rows = spec.postSoftmax ? capture.headRows : capture.headNumerators;
    const aggregated = aggregateHeads(rows, spec.headAggregation, capture.seqLen);
    attention.set(aggregated.subarray(0, visualPerSegment), s * visualPerSegment);
  }

  return {
    segments,
    segmentLen: framesPerSegment,
    height: tokenRows,
    width: tokenCols,
    embedDim,
    // max-aggregated rows are not probabilities even when normalized,
    // so the post-softmax flag only holds for mean aggregation
    postSoftmax: spec.postSoftmax && spec.headAggregation === "mean",
    attention,
    embeddings,
  };
}
