/**
 * Frame sources and sequence protocols.
 *
 * Frames are plain RGB byte buffers. They come either from binary PPM
 * (P6) files on disk or from a seeded procedural generator, and are
 * resized (nearest neighbor) to whatever pixel size the patch grid
 * needs. Two protocol transforms reorder a sampled sequence: full
 * reversal, and repeating one frame over the whole sequence.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { SplitMix64 } from "./rng.js";

export interface FrameImage {
  width: number;
  height: number;
  /** RGB, row-major, 3 bytes per pixel */
  pixels: Uint8Array;
}

export function syntheticVideo(
  seed: number,
  count: number,
  width: number,
  height: number,
): FrameImage[] {
  const rng = new SplitMix64(seed);
  const blobX = rng.nextUnit();
  const blobY = rng.nextUnit();
  const driftX = rng.nextSymmetric(0.8);
  const driftY = rng.nextSymmetric(0.8);
  const hue = rng.nextUnit();
  const frames: FrameImage[] = [];
  for (let f = 0; f < count; f++) {
    const pixels = new Uint8Array(width * height * 3);
    const t = count > 1 ? f / (count - 1) : 0;
    const cx = ((blobX + driftX * t) % 1 + 1) % 1;
    const cy = ((blobY + driftY * t) % 1 + 1) % 1;
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const u = x / width;
        const v = y / height;
        const dist = (u - cx) ** 2 + (v - cy) ** 2;
        const blob = Math.exp(-dist / 0.02);
        const base = 0.25 + 0.5 * u * (1 - v);
        const off = (y * width + x) * 3;
        pixels[off] = Math.round(255 * Math.min(1, base + blob * hue));
        pixels[off + 1] = Math.round(255 * Math.min(1, base * (1 - t) + blob * 0.6));
        pixels[off + 2] = Math.round(255 * Math.min(1, base * t + blob * (1 - hue)));
      }
    }
    frames.push({ width, height, pixels });
  }
  return frames;
}

/** Parse a binary PPM (P6, maxval 255). */
export function readPpm(filePath: string): FrameImage {
  const data = fs.readFileSync(filePath);
  let pos = 0;
  const token = (): string => {
    while (pos < data.length && /\s/.test(String.fromCharCode(data[pos]))) pos++;
    if (data[pos] === 0x23) {
      // comment line
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      return token();
    }
    const start = pos;
    while (pos < data.length && !/\s/.test(String.fromCharCode(data[pos]))) pos++;
    return data.subarray(start, pos).toString("ascii");
  };
  const magic = token();
  if (magic !== "P6") {
    throw new Error(`${filePath}: not a binary PPM (magic ${magic})`);
  }
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0 && height > 0) || maxval !== 255) {
    throw new Error(`${filePath}: unsupported PPM header ${width}x${height}/${maxval}`);
  }
  pos++; // single whitespace after maxval
  const need = width * height * 3;
  if (data.length - pos < need) {
    throw new Error(`${filePath}: truncated pixel data`);
  }
  return { width, height, pixels: new Uint8Array(data.subarray(pos, pos + need)) };
}

export function readFramesDir(dir: string): FrameImage[] {
  const names = fs
    .readdirSync(dir)
    .filter((n) => n.toLowerCase().endsWith(".ppm"))
    .sort();
  if (names.length === 0) {
    throw new Error(`no .ppm frames in ${dir}`);
  }
  return names.map((n) => readPpm(path.join(dir, n)));
}

export function resizeNearest(frame: FrameImage, width: number, height: number): FrameImage {
  if (frame.width === width && frame.height === height) return frame;
  const pixels = new Uint8Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    const sy = Math.min(frame.height - 1, Math.floor((y * frame.height) / height));
    for (let x = 0; x < width; x++) {
      const sx = Math.min(frame.width - 1, Math.floor((x * frame.width) / width));
      const src = (sy * frame.width + sx) * 3;
      const dst = (y * width + x) * 3;
      pixels[dst] = frame.pixels[src];
      pixels[dst + 1] = frame.pixels[src + 1];
      pixels[dst + 2] = frame.pixels[src + 2];
    }
  }
  return { width, height, pixels };
}

export function reverseFrames(frames: FrameImage[]): FrameImage[] {
  return [...frames].reverse();
}

export function repeatSingle(frames: FrameImage[], index: number): FrameImage[] {
  if (index < 0 || index >= frames.length) {
    throw new Error(`frame index ${index} out of range [0, ${frames.length})`);
  }
  return frames.map(() => frames[index]);
}

/**
 * Per-patch features for one frame: mean R/G/B over the patch plus the
 * normalized patch row/col and a constant, 6 values per token.
 */
export function patchFeatures(
  frame: FrameImage,
  tokenRows: number,
  tokenCols: number,
  patchSize: number,
): Float32Array {
  const wantW = tokenCols * patchSize;
  const wantH = tokenRows * patchSize;
  const sized = resizeNearest(frame, wantW, wantH);
  const out = new Float32Array(tokenRows * tokenCols * 6);
  for (let r = 0; r < tokenRows; r++) {
    for (let c = 0; c < tokenCols; c++) {
      let sumR = 0;
      let sumG = 0;
      let sumB = 0;
      for (let y = 0; y < patchSize; y++) {
        for (let x = 0; x < patchSize; x++) {
          const px = ((r * patchSize + y) * wantW + c * patchSize + x) * 3;
          sumR += sized.pixels[px];
          sumG += sized.pixels[px + 1];
          sumB += sized.pixels[px + 2];
        }
      }
      const n = patchSize * patchSize * 255;
      const off = (r * tokenCols + c) * 6;
      out[off] = sumR / n;
      out[off + 1] = sumG / n;
      out[off + 2] = sumB / n;
      out[off + 3] = tokenRows > 1 ? r / (tokenRows - 1) : 0;
      out[off + 4] = tokenCols > 1 ? c / (tokenCols - 1) : 0;
      out[off + 5] = 1;
    }
  }
  return out;
}
