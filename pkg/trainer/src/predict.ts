/** Inference: one SoS map per RF frame, written back in the container format. */

import * as fs from "node:fs";
import * as path from "node:path";

import { Dataset, FLAG_PREDICTION, writeSample } from "./data.js";
import { Model } from "./model.js";
import { Tensor } from "./tensor.js";

export function predictDataset(model: Model, dataset: Dataset, outDir: string): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  const h = dataset.channels;
  const w = dataset.rxSamples;
  for (let i = 0; i < dataset.inputs.length; i++) {
    const x = Tensor.zeros([1, 1, h, w]);
    x.data.set(dataset.inputs[i]);
    const pred = model.forward(x, false);
    const g = model.cfg.outputSize;
    const entry = dataset.entries[i];
    const name = `pred_${String(entry.index).padStart(5, "0")}.sosd`;
    writeSample(
      {
        rf: new Float64Array(0),
        channels: 0,
        rxSamples: 0,
        gt: Float32Array.from(pred.data),
        gtH: g,
        gtW: g,
        flags: FLAG_PREDICTION,
        seed: BigInt(entry.seed),
      },
      path.join(outDir, name),
    );
    written.push(name);
  }
  return written;
}
