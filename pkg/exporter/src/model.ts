/**
 * Minimal vision-language decoder used to produce genuine attention.
 *
 * The sequence is [visual tokens][query byte tokens]; blocks are
 * pre-LayerNorm transformer layers with causal multi-head attention.
 * The forward pass stops at the requested layer and returns that
 * layer's post-softmax attention row of the last query position, per
 * head, plus the projected visual-token embeddings. Weights are
 * deterministic functions of a seed, so exports are reproducible.
 *
 * Only the built-in identifier "toy-vlm" is loadable; anything else
 * fails the same way a missing checkpoint would.
 */

import { SplitMix64 } from "./rng.js";

export class ModelLoadError extends Error {}

export interface ModelConfig {
  dModel: number;
  nHeads: number;
  nLayers: number;
  mlpDim: number;
}

export const TOY_VLM: ModelConfig = { dModel: 32, nHeads: 4, nLayers: 6, mlpDim: 64 };

const PATCH_FEATURES = 6; // mean R,G,B + normalized row,col + bias
const BYTE_VOCAB = 256;

interface LayerWeights {
  ln1Gain: Float32Array;
  ln1Bias: Float32Array;
  wq: Float32Array;
  wk: Float32Array;
  wv: Float32Array;
  wo: Float32Array;
  ln2Gain: Float32Array;
  ln2Bias: Float32Array;
  w1: Float32Array;
  b1: Float32Array;
  w2: Float32Array;
  b2: Float32Array;
}

export interface AttentionCapture {
  /** nHeads x seqLen post-softmax probabilities of the last position */
  headRows: Float32Array[];
  seqLen: number;
  /** per-position softmax numerators exp(logit - rowMax), same layout */
  headNumerators: Float32Array[];
}

function matmul(
  a: Float32Array,
  b: Float32Array,
  rows: number,
  inner: number,
  cols: number,
): Float32Array {
  const out = new Float32Array(rows * cols);
  for (let i = 0; i < rows; i++) {
    const aOff = i * inner;
    const oOff = i * cols;
    for (let k = 0; k < inner; k++) {
      const av = a[aOff + k];
      if (av === 0) continue;
      const bOff = k * cols;
      for (let j = 0; j < cols; j++) {
        out[oOff + j] += av * b[bOff + j];
      }
    }
  }
  return out;
}

function layerNorm(
  x: Float32Array,
  rows: number,
  dim: number,
  gain: Float32Array,
  bias: Float32Array,
): Float32Array {
  const out = new Float32Array(rows * dim);
  for (let i = 0; i < rows; i++) {
    const off = i * dim;
    let mean = 0;
    for (let j = 0; j < dim; j++) mean += x[off + j];
    mean /= dim;
    let variance = 0;
    for (let j = 0; j < dim; j++) {
      const d = x[off + j] - mean;
      variance += d * d;
    }
    const inv = 1 / Math.sqrt(variance / dim + 1e-5);
    for (let j = 0; j < dim; j++) {
      out[off + j] = (x[off + j] - mean) * inv * gain[j] + bias[j];
    }
  }
  return out;
}

function gelu(x: number): number {
  return 0.5 * x * (1 + Math.tanh(Math.sqrt(2 / Math.PI) * (x + 0.044715 * x ** 3)));
}

export class ToyVLM {
  readonly config: ModelConfig;
  private readonly patchProj: Float32Array; // PATCH_FEATURES x dModel
  private readonly byteEmbed: Float32Array; // BYTE_VOCAB x dModel
  private readonly layers: LayerWeights[];

  constructor(config: ModelConfig, seed: number) {
    this.config = config;
    const rng = new SplitMix64(seed);
    const d = config.dModel;
    const scale = 1 / Math.sqrt(d);
    this.patchProj = rng.fill(new Float32Array(PATCH_FEATURES * d), 1.0);
    this.byteEmbed = rng.fill(new Float32Array(BYTE_VOCAB * d), 1.0);
    this.layers = [];
    for (let l = 0; l < config.nLayers; l++) {
      this.layers.push({
        ln1Gain: new Float32Array(d).fill(1),
        ln1Bias: new Float32Array(d),
        wq: rng.fill(new Float32Array(d * d), scale),
        wk: rng.fill(new Float32Array(d * d), scale),
        wv: rng.fill(new Float32Array(d * d), scale),
        wo: rng.fill(new Float32Array(d * d), scale),
        ln2Gain: new Float32Array(d).fill(1),
        ln2Bias: new Float32Array(d),
        w1: rng.fill(new Float32Array(d * config.mlpDim), scale),
        b1: new Float32Array(config.mlpDim),
        w2: rng.fill(new Float32Array(config.mlpDim * d), 1 / Math.sqrt(config.mlpDim)),
        b2: new Float32Array(d),
      });
    }
  }

  /** Project per-patch features (nTokens x PATCH_FEATURES) into model space. */
  projectPatches(features: Float32Array, nTokens: number): Float32Array {
    return matmul(features, this.patchProj, nTokens, PATCH_FEATURES, this.config.dModel);
  }

  embedBytes(bytes: Uint8Array): Float32Array {
    const d = this.config.dModel;
    const out = new Float32Array(bytes.length * d);
    for (let i = 0; i < bytes.length; i++) {
      out.set(this.byteEmbed.subarray(bytes[i] * d, (bytes[i] + 1) * d), i * d);
    }
    return out;
  }

  private addSinusoidalPositions(x: Float32Array, rows: number): void {
    const d = this.config.dModel;
    for (let p = 0; p < rows; p++) {
      for (let i = 0; i < d / 2; i++) {
        const angle = p / 10000 ** ((2 * i) / d);
        x[p * d + 2 * i] += Math.sin(angle);
        x[p * d + 2 * i + 1] += Math.cos(angle);
      }
    }
  }

  /**
   * Run layers 1..captureLayer and return the last position's attention.
   *
   * visual: nVisual x dModel projected tokens; queryBytes: UTF-8 query.
   * The returned rows cover the full sequence; callers slice the visual
   * prefix. Deeper layers are never evaluated.
   */
  forwardCapture(
    visual: Float32Array,
    nVisual: number,
    queryBytes: Uint8Array,
    captureLayer: number,
  ): AttentionCapture {
    if (queryBytes.length === 0) {
      throw new Error("query must produce at least one token");
    }
    if (captureLayer < 1 || captureLayer > this.config.nLayers) {
      throw new Error(
        `layer ${captureLayer} out of range [1, ${this.config.nLayers}]`,
      );
    }
    const d = this.config.dModel;
    const seqLen = nVisual + queryBytes.length;
    const hidden = new Float32Array(seqLen * d);
    hidden.set(visual.subarray(0, nVisual * d), 0);
    hidden.set(this.embedBytes(queryBytes), nVisual * d);
    this.addSinusoidalPositions(hidden, seqLen);

    for (let l = 0; l < captureLayer; l++) {
      const layer = this.layers[l];
      const isCapture = l === captureLayer - 1;
      const normed = layerNorm(hidden, seqLen, d, layer.ln1Gain, layer.ln1Bias);
      const q = matmul(normed, layer.wq, seqLen, d, d);
      const k = matmul(normed, layer.wk, seqLen, d, d);
      const v = matmul(normed, layer.wv, seqLen, d, d);
      if (isCapture) {
        // only the last position's row is needed; skip the rest of the layer
        return this.lastRowAttention(q, k, seqLen);
      }
      const attnOut = this.causalAttention(q, k, v, seqLen);
      const projected = matmul(attnOut, layer.wo, seqLen, d, d);
      for (let i = 0; i < hidden.length; i++) hidden[i] += projected[i];

      const normed2 = layerNorm(hidden, seqLen, d, layer.ln2Gain, layer.ln2Bias);
      const up = matmul(normed2, layer.w1, seqLen, d, this.config.mlpDim);
      for (let i = 0; i < seqLen; i++) {
        const off = i * this.config.mlpDim;
        for (let j = 0; j < this.config.mlpDim; j++) {
          up[off + j] = gelu(up[off + j] + layer.b1[j]);
        }
      }
      const down = matmul(up, layer.w2, seqLen, this.config.mlpDim, d);
      for (let i = 0; i < seqLen; i++) {
        const off = i * d;
        for (let j = 0; j < d; j++) hidden[off + j] += down[off + j] + layer.b2[j];
      }
    }
    throw new Error("unreachable: capture layer not hit");
  }

  private headDim(): number {
    return this.config.dModel / this.config.nHeads;
  }

  private causalAttention(
    q: Float32Array,
    k: Float32Array,
    v: Float32Array,
    seqLen: number,
  ): Float32Array {
    const d = this.config.dModel;
    const heads = this.config.nHeads;
    const hd = this.headDim();
    const invSqrt = 1 / Math.sqrt(hd);
    const out = new Float32Array(seqLen * d);
    const scores = new Float32Array(seqLen);
    for (let h = 0; h < heads; h++) {
      const hOff = h * hd;
      for (let i = 0; i < seqLen; i++) {
        const qOff = i * d + hOff;
        let max = -Infinity;
        for (let j = 0; j <= i; j++) {
          const kOff = j * d + hOff;
          let dot = 0;
          for (let t = 0; t < hd; t++) dot += q[qOff + t] * k[kOff + t];
          const s = dot * invSqrt;
          scores[j] = s;
          if (s > max) max = s;
        }
        let denom = 0;
        for (let j = 0; j <= i; j++) {
          scores[j] = Math.exp(scores[j] - max);
          denom += scores[j];
        }
        const oOff = i * d + hOff;
        for (let j = 0; j <= i; j++) {
          const w = scores[j] / denom;
          const vOff = j * d + hOff;
          for (let t = 0; t < hd; t++) out[oOff + t] += w * v[vOff + t];
        }
      }
    }
    return out;
  }

  private lastRowAttention(
    q: Float32Array,
    k: Float32Array,
    seqLen: number,
  ): AttentionCapture {
    const d = this.config.dModel;
    const heads = this.config.nHeads;
    const hd = this.headDim();
    const invSqrt = 1 / Math.sqrt(hd);
    const last = seqLen - 1;
    const headRows: Float32Array[] = [];
    const headNumerators: Float32Array[] = [];
    for (let h = 0; h < heads; h++) {
      const hOff = h * hd;
      const qOff = last * d + hOff;
      const logits = new Float32Array(seqLen);
      let max = -Infinity;
      for (let j = 0; j < seqLen; j++) {
        const kOff = j * d + hOff;
        let dot = 0;
        for (let t = 0; t < hd; t++) dot += q[qOff + t] * k[kOff + t];
        logits[j] = dot * invSqrt;
        if (logits[j] > max) max = logits[j];
      }
      const numerators = new Float32Array(seqLen);
      let denom = 0;
      for (let j = 0; j < seqLen; j++) {
        numerators[j] = Math.exp(logits[j] - max);
        denom += numerators[j];
      }
      const probs = new Float32Array(seqLen);
      for (let j = 0; j < seqLen; j++) probs[j] = numerators[j] / denom;
      headRows.push(probs);
      headNumerators.push(numerators);
    }
    return { headRows, headNumerators, seqLen };
  }
}

export function loadModel(identifier: string, seed = 1): ToyVLM {
  if (identifier !== "toy-vlm") {
    throw new ModelLoadError(
      `model "${identifier}" is not available; this exporter ships only "toy-vlm"`,
    );
  }
  return new ToyVLM(TOY_VLM, seed);
}
