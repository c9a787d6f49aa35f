/**
 * Binary encodings shared with the core CLI: spectrogram containers
 * (SPFM / SPFC) and a float32 WAV writer. All fields are little-endian;
 * matrix payloads are row-major float64, read into a single Float64Array
 * (one copy per boundary crossing).
 */

export const METHODS = ["max", "avg", "avgmax", "spectral", "uniform"] as const;
export type Method = (typeof METHODS)[number];

const MEL_MAGIC = 0x4d465053; // "SPFM" little-endian
const COMPRESSED_MAGIC = 0x43465053; // "SPFC"

export interface Spectrogram {
  data: Float64Array;
  nMels: number;
  nFrames: number;
}

export interface CompressedSpectrogram extends Spectrogram {
  method: Method;
  denominator: number;
  originalFrames: number;
}

/** Serialize a plain mel container (magic, F, T, row-major float64). */
export function writeMelContainer(spec: Spectrogram): Uint8Array {
  const { data, nMels, nFrames } = spec;
  if (data.length !== nMels * nFrames) {
    throw new RangeError(
      `buffer length ${data.length} does not match ${nMels}x${nFrames}`,
    );
  }
  const out = new Uint8Array(12 + 8 * data.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, MEL_MAGIC, true);
  view.setUint32(4, nMels, true);
  view.setUint32(8, nFrames, true);
  for (let i = 0; i < data.length; i++) {
    view.setFloat64(12 + 8 * i, data[i], true);
  }
  return out;
}

function readMatrix(view: DataView, offset: number): Spectrogram {
  const nMels = view.getUint32(offset, true);
  const nFrames = view.getUint32(offset + 4, true);
  const count = nMels * nFrames;
  if (view.byteLength < offset + 8 + 8 * count) {
    throw new RangeError("container truncated");
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat64(offset + 8 + 8 * i, true);
  }
  return { data, nMels, nFrames };
}

/** Parse either container kind produced by the CLI. */
export function readSpectrogramContainer(
  buf: Uint8Array,
): Spectrogram | CompressedSpectrogram {
  if (buf.byteLength < 12) throw new RangeError("container too small");
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const magic = view.getUint32(0, true);
  if (magic === MEL_MAGIC) {
    return readMatrix(view, 4);
  }
  if (magic === COMPRESSED_MAGIC) {
    const methodCode = view.getUint8(4);
    if (methodCode >= METHODS.length) {
      throw new RangeError(`unknown method code ${methodCode}`);
    }
    const denominator = view.getUint32(5, true);
    const originalFrames = view.getUint32(9, true);
    return {
      ...readMatrix(view, 13),
      method: METHODS[methodCode],
      denominator,
      originalFrames,
    };
  }
  throw new RangeError(`unknown container magic 0x${magic.toString(16)}`);
}

/** Encode mono samples as an IEEE float32 RIFF/WAVE stream. */
export function encodeWavFloat32(
  samples: ArrayLike<number>,
  sampleRate: number,
): Uint8Array {
  const n = samples.length;
  const dataBytes = 4 * n;
  const out = new Uint8Array(44 + dataBytes);
  const view = new DataView(out.buffer);
  const ascii = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) out[offset + i] = text.charCodeAt(i);
  };
  ascii(0, "RIFF");
  view.setUint32(4, 36 + dataBytes, true);
  ascii(8, "WAVE");
  ascii(12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 3, true); // IEEE float
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 4, true);
  view.setUint16(32, 4, true);
  view.setUint16(34, 32, true);
  ascii(36, "data");
  view.setUint32(40, dataBytes, true);
  for (let i = 0; i < n; i++) {
    view.setFloat32(44 + 4 * i, samples[i], true);
  }
  return out;
}
