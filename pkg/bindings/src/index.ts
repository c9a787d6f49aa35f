/**
 * Node bindings for the simpf feature + pooling pipeline.
 *
 * The core library is consumed strictly through its external
 * interfaces: the `simpf` CLI and its binary container formats. Inputs
 * cross the boundary once (WAV or container file), results come back as
 * contiguous Float64Arrays read from the output container. No state is
 * kept between calls.
 */
import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  CompressedSpectrogram,
  METHODS,
  Method,
  Spectrogram,
  encodeWavFloat32,
  readSpectrogramContainer,
  writeMelContainer,
} from "./container.js";

export { METHODS } from "./container.js";
export type { CompressedSpectrogram, Method, Spectrogram } from "./container.js";

/** Mirrors the core library version. */
export const VERSION = "0.1.0";

/** Raised when the underlying CLI fails for a non-domain reason. */
export class CliError extends Error {}

export interface LogMelConfig {
  nFft?: number;
  hop?: number;
  nMels?: number;
  fMin?: number;
  fMax?: number;
  logFloor?: number;
}

interface CliResult {
  stdout: string;
}

function cliCommand(): { command: string; prefix: string[] } {
  const override = process.env.SIMPF_CLI;
  if (override) {
    const [command, ...prefix] = override.split(" ");
    return { command, prefix };
  }
  return { command: "simpf", prefix: [] };
}

function runCli(args: string[]): CliResult {
  const { command, prefix } = cliCommand();
  let result = spawnSync(command, [...prefix, ...args], { encoding: "utf8" });
  if (result.error && (result.error as NodeJS.ErrnoException).code === "ENOENT") {
    // console script not on PATH; fall back to the module entry point
    result = spawnSync("python3", ["-m", "simpf.cli", ...args], { encoding: "utf8" });
  }
  if (result.error) throw new CliError(`failed to launch simpf CLI: ${result.error}`);
  if (result.status !== 0) {
    const message = (result.stderr || result.stdout || "").trim();
    // exit 1 = domain error, exit 2 = usage/I-O error; both indicate a
    // bad value from the caller's perspective here
    throw new RangeError(message || `simpf CLI exited with ${result.status}`);
  }
  return { stdout: result.stdout };
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "simpf-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function checkFinite(values: ArrayLike<number>, label: string): void {
  if (values.length === 0) {
    throw new RangeError(`${label} must hold at least one value`);
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new RangeError(`${label}[${i}] is not finite`);
    }
  }
}

/**
 * Log-mel spectrogram of a mono sample buffer.
 *
 * @param samples amplitudes in [-1, 1] (cast to float32 at the boundary)
 * @param sampleRate sampling frequency in Hz
 * @param config optional front-end overrides (FFT size, hop, mel count, band, floor)
 * @returns row-major (nMels x nFrames) matrix as one contiguous Float64Array
 */
export function logMel(
  samples: ArrayLike<number>,
  sampleRate: number,
  config: LogMelConfig = {},
): Spectrogram {
  checkFinite(samples, "samples");
  if (!Number.isInteger(sampleRate) || sampleRate <= 0) {
    throw new RangeError(`sample rate must be a positive integer, got ${sampleRate}`);
  }
  return withTempDir((dir) => {
    const wavPath = join(dir, "in.wav");
    const outPath = join(dir, "out.bin");
    writeFileSync(wavPath, encodeWavFloat32(samples, sampleRate));
    const flags: string[] = [];
    if (config.nFft !== undefined) flags.push("--n-fft", String(config.nFft));
    if (config.hop !== undefined) flags.push("--hop", String(config.hop));
    if (config.nMels !== undefined) flags.push("--n-mels", String(config.nMels));
    if (config.fMin !== undefined) flags.push("--f-min", String(config.fMin));
    if (config.fMax !== undefined) flags.push("--f-max", String(config.fMax));
    if (config.logFloor !== undefined) flags.push("--log-floor", String(config.logFloor));
    runCli(["melspec", wavPath, outPath, ...flags]);
    const spec = readSpectrogramContainer(readFileSync(outPath));
    return { data: spec.data, nMels: spec.nMels, nFrames: spec.nFrames };
  });
}

/**
 * Compress the time axis of a spectrogram with one of the five pooling
 * methods. Output has floor(nFrames / denominator) frames.
 *
 * @param spectrogram row-major matrix plus its (nMels, nFrames) shape
 * @param method one of max, avg, avgmax, spectral, uniform
 * @param denominator integer >= 2; the compression factor is 1/denominator
 */
export function compress(
  spectrogram: Spectrogram,
  method: string,
  denominator: number,
): CompressedSpectrogram {
  if (!(METHODS as readonly string[]).includes(method)) {
    throw new RangeError(
      `unknown pooling method ${JSON.stringify(method)}; expected one of ${METHODS.join(", ")}`,
    );
  }
  if (!Number.isInteger(denominator) || denominator < 2) {
    throw new RangeError(`denominator must be an integer >= 2, got ${denominator}`);
  }
  checkFinite(spectrogram.data, "spectrogram");
  return withTempDir((dir) => {
    const inPath = join(dir, "in.bin");
    const outPath = join(dir, "out.bin");
    writeFileSync(inPath, writeMelContainer(spectrogram));
    runCli(["pool", inPath, `${method}:${denominator}`, outPath]);
    const out = readSpectrogramContainer(readFileSync(outPath));
    if (!("method" in out)) throw new CliError("expected a compressed container");
    return out;
  });
}
