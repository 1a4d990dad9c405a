/**
 * VTDK1 dump serialization (little-endian).
 *
 * Layout: 4-byte magic "VTDK", uint32 version (1), five uint32 fields
 * (segments, segmentLen, height, width, embedDim), one flags byte
 * (bit 0: attention is post-softmax), three zero padding bytes, then
 * the attention payload (segments*segmentLen*height*width float32s in
 * segment/frame/row/col order) and the embedding payload (same order
 * with a trailing dim axis).
 */

export interface TokenDump {
  segments: number;
  segmentLen: number;
  height: number;
  width: number;
  embedDim: number;
  postSoftmax: boolean;
  /** segments*segmentLen*height*width values, flat */
  attention: Float32Array;
  /** attention.length * embedDim values, flat */
  embeddings: Float32Array;
}

export const VTDK_MAGIC = 0x4b445456; // "VTDK" read little-endian
export const VTDK_VERSION = 1;
export const VTDK_HEADER_SIZE = 32;

export function dumpByteLength(dump: TokenDump): number {
  return VTDK_HEADER_SIZE + 4 * dump.attention.length + 4 * dump.embeddings.length;
}

export function encodeDump(dump: TokenDump): Uint8Array {
  const tokens = dump.segments * dump.segmentLen * dump.height * dump.width;
  if (dump.attention.length !== tokens) {
    throw new Error(
      `attention length ${dump.attention.length} does not match shape (${tokens} tokens)`,
    );
  }
  if (dump.embeddings.length !== tokens * dump.embedDim) {
    throw new Error(
      `embeddings length ${dump.embeddings.length} does not match ${tokens}x${dump.embedDim}`,
    );
  }
  const out = new Uint8Array(dumpByteLength(dump));
  const view = new DataView(out.buffer);
  view.setUint32(0, VTDK_MAGIC, true);
  view.setUint32(4, VTDK_VERSION, true);
  view.setUint32(8, dump.segments, true);
  view.setUint32(12, dump.segmentLen, true);
  view.setUint32(16, dump.height, true);
  view.setUint32(20, dump.width, true);
  view.setUint32(24, dump.embedDim, true);
  view.setUint8(28, dump.postSoftmax ? 1 : 0);
  // bytes 29..31 stay zero
  let offset = VTDK_HEADER_SIZE;
  for (const payload of [dump.attention, dump.embeddings]) {
    for (let i = 0; i < payload.length; i++, offset += 4) {
      view.setFloat32(offset, payload[i], true);
    }
  }
  return out;
}

/** Parse a VTDK1 buffer; used by the tests to close the loop. */
export function decodeDump(data: Uint8Array): TokenDump {
  if (data.length < VTDK_HEADER_SIZE) {
    throw new Error(`buffer too short for header: ${data.length} bytes`);
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (view.getUint32(0, true) !== VTDK_MAGIC) {
    throw new Error("bad magic at byte 0");
  }
  const version = view.getUint32(4, true);
  if (version !== VTDK_VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const segments = view.getUint32(8, true);
  const segmentLen = view.getUint32(12, true);
  const height = view.getUint32(16, true);
  const width = view.getUint32(20, true);
  const embedDim = view.getUint32(24, true);
  const flags = view.getUint8(28);
  const tokens = segments * segmentLen * height * width;
  const expected = VTDK_HEADER_SIZE + 4 * tokens * (1 + embedDim);
  if (data.length !== expected) {
    throw new Error(`payload length ${data.length} != expected ${expected}`);
  }
  const attention = new Float32Array(tokens);
  const embeddings = new Float32Array(tokens * embedDim);
  let offset = VTDK_HEADER_SIZE;
  for (let i = 0; i < attention.length; i++, offset += 4) {
    attention[i] = view.getFloat32(offset, true);
  }
  for (let i = 0; i < embeddings.length; i++, offset += 4) {
    embeddings[i] = view.getFloat32(offset, true);
  }
  return {
    segments,
    segmentLen,
    height,
    width,
    embedDim,
    postSoftmax: (flags & 1) === 1,
    attention,
    embeddings,
  };
}
