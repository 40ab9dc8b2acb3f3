/** Reader/writer for the binary sample container and dataset manifests.

Layout (little-endian): magic "SOSD", u16 version, u16 channels,
u32 receive samples, u16 gt height, u16 gt width, u32 flags, u64 seed,
then the RF payload as float64 and the ground-truth payload as float32,
both row-major.
*/

import * as fs from "node:fs";
import * as path from "node:path";

export const MAGIC = "SOSD";
export const FORMAT_VERSION = 1;
export const HEADER_BYTES = 28;

export const FLAG_PREPROCESSED = 1 << 0;
export const FLAG_CORRUPTED = 1 << 1;
export const FLAG_PREDICTION = 1 << 2;
export const FLAG_MASK = 1 << 3;

export interface SampleRecord {
  rf: Float64Array; // channels x rxSamples
  channels: number;
  rxSamples: number;
  gt: Float32Array; // gtH x gtW
  gtH: number;
  gtW: number;
  flags: number;
  seed: bigint;
}

export function readSample(file: string): SampleRecord {
  const buf = fs.readFileSync(file);
  if (buf.length < HEADER_BYTES) {
    throw new Error(`${file}: truncated header (${buf.length} bytes)`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const magic = buf.toString("latin1", 0, 4);
  if (magic !== MAGIC) throw new Error(`${file}: bad magic ${magic}`);
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new Error(`${file}: unsupported format version ${version}`);
  }
  const channels = view.getUint16(6, true);
  const rxSamples = view.getUint32(8, true);
  const gtH = view.getUint16(12, true);
  const gtW = view.getUint16(14, true);
  const flags = view.getUint32(16, true);
  const seed = view.getBigUint64(20, true);
  const rfBytes = channels * rxSamples * 8;
  const gtBytes = gtH * gtW * 4;
  if (buf.length !== HEADER_BYTES + rfBytes + gtBytes) {
    throw new Error(
      `${file}: size mismatch (have ${buf.length}, header declares ${HEADER_BYTES + rfBytes + gtBytes})`,
    );
  }
  const rf = new Float64Array(channels * rxSamples);
  for (let i = 0; i < rf.length; i++) {
    rf[i] = view.getFloat64(HEADER_BYTES + i * 8, true);
  }
  const gt = new Float32Array(gtH * gtW);
  for (let i = 0; i < gt.length; i++) {
    gt[i] = view.getFloat32(HEADER_BYTES + rfBytes + i * 4, true);
  }
  return { rf, channels, rxSamples, gt, gtH, gtW, flags, seed };
}

export function writeSample(record: SampleRecord, file: string): void {
  const rfBytes = record.channels * record.rxSamples * 8;
  const gtBytes = record.gtH * record.gtW * 4;
  const buf = Buffer.alloc(HEADER_BYTES + rfBytes + gtBytes);
  buf.write(MAGIC, 0, "latin1");
  buf.writeUInt16LE(FORMAT_VERSION, 4);
  buf.writeUInt16LE(record.channels, 6);
  buf.writeUInt32LE(record.rxSamples, 8);
  buf.writeUInt16LE(record.gtH, 12);
  buf.writeUInt16LE(record.gtW, 14);
  buf.writeUInt32LE(record.flags, 16);
  buf.writeBigUInt64LE(record.seed, 20);
  for (let i = 0; i < record.rf.length; i++) {
    buf.writeDoubleLE(record.rf[i], HEADER_BYTES + i * 8);
  }
  for (let i = 0; i < record.gt.length; i++) {
    buf.writeFloatLE(record.gt[i], HEADER_BYTES + rfBytes + i * 4);
  }
  fs.writeFileSync(file, buf);
}

export interface ManifestEntry {
  file: string;
  index: number;
  seed: number;
  [key: string]: unknown;
}

export interface Manifest {
  config: Record<string, unknown>;
  samples: ManifestEntry[];
  dir: string;
}

export function readManifest(manifestPath: string): Manifest {
  const doc = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  if (doc.format !== "sosd-manifest") {
    throw new Error(`${manifestPath}: not a dataset manifest`);
  }
  return {
    config: doc.config,
    samples: doc.samples,
    dir: path.dirname(manifestPath),
  };
}

export interface Dataset {
  inputs: Float64Array[]; // channels x rxSamples, normalized RF
  targets: Float32Array[]; // gtH x gtW in m/s
  channels: number;
  rxSamples: number;
  gtSize: number;
  entries: ManifestEntry[];
}

export function loadDataset(manifestPath: string): Dataset {
  const manifest = readManifest(manifestPath);
  if (manifest.samples.length === 0) throw new Error("dataset manifest lists no samples");
  const inputs: Float64Array[] = [];
  const targets: Float32Array[] = [];
  let channels = 0;
  let rxSamples = 0;
  let gtSize = 0;
  for (const entry of manifest.samples) {
    const rec = readSample(path.join(manifest.dir, entry.file));
    if (inputs.length === 0) {
      channels = rec.channels;
      rxSamples = rec.rxSamples;
      gtSize = rec.gtH;
    } else if (rec.channels !== channels || rec.rxSamples !== rxSamples) {
      throw new Error(`${entry.file}: sample shape differs from the rest of the dataset`);
    }
    if (rec.gtH !== rec.gtW) throw new Error(`${entry.file}: ground truth is not square`);
    inputs.push(rec.rf);
    targets.push(rec.gt);
  }
  return { inputs, targets, channels, rxSamples, gtSize, entries: manifest.samples };
}
