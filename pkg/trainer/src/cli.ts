/** Command line: train | predict.

Examples:
  node dist/cli.js train --manifest data/manifest.json --out runs/a --steps 500
  node dist/cli.js predict --checkpoint runs/a/checkpoint.json \
      --manifest data/manifest.json --out preds/
*/

import * as path from "node:path";

import { loadDataset } from "./data.js";
import { Model, defaultConfig } from "./model.js";
import { predictDataset } from "./predict.js";
import { defaultTrainConfig, loadCheckpoint, train } from "./train.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    out.set(key.slice(2), argv[i + 1]);
  }
  return out;
}

function need(args: Map<string, string>, key: string): string {
  const v = args.get(key);
  if (v === undefined) throw new Error(`missing required --${key}`);
  return v;
}

function cmdTrain(args: Map<string, string>): number {
  const dataset = loadDataset(need(args, "manifest"));
  const outDir = need(args, "out");
  const cfg = defaultTrainConfig();
  if (args.has("steps")) cfg.steps = Number(args.get("steps"));
  if (args.has("lr")) cfg.learningRate = Number(args.get("lr"));
  if (args.has("lr-decay")) cfg.lrDecay = Number(args.get("lr-decay"));
  if (args.has("batch")) cfg.batchSize = Number(args.get("batch"));
  if (args.has("momentum")) cfg.momentum = Number(args.get("momentum"));
  if (args.has("noise-sd")) cfg.inputNoiseSd = Number(args.get("noise-sd"));
  if (args.has("seed")) cfg.seed = Number(args.get("seed"));

  let model: Model;
  let resume;
  if (args.has("resume")) {
    const loaded = loadCheckpoint(need(args, "resume"));
    model = loaded.model;
    resume = loaded.ckpt;
  } else {
    const netCfg = defaultConfig(
      dataset.channels, dataset.rxSamples, dataset.gtSize, cfg.seed,
    );
    if (args.has("dropout")) netCfg.dropoutRate = Number(args.get("dropout"));
    model = new Model(netCfg);
  }
  console.log(`model parameters: ${model.paramCount}`);
  const result = train(model, dataset, cfg, outDir, resume);
  const last = result.losses.at(-1);
  console.log(
    `finished at step ${result.finalStep}` +
      (last ? ` (loss ${last.loss.toExponential(3)}, rmse ${last.rmse.toFixed(2)} m/s)` : ""),
  );
  console.log(`checkpoint: ${path.join(outDir, "checkpoint.json")}`);
  return 0;
}

function cmdPredict(args: Map<string, string>): number {
  const { model } = loadCheckpoint(need(args, "checkpoint"));
  const dataset = loadDataset(need(args, "manifest"));
  const files = predictDataset(model, dataset, need(args, "out"));
  console.log(`wrote ${files.length} prediction records`);
  return 0;
}

function main(): number {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === "train") return cmdTrain(parseArgs(rest));
    if (command === "predict") return cmdPredict(parseArgs(rest));
    console.error("usage: cli.js train|predict [--flag value ...]");
    return 2;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

process.exit(main());
