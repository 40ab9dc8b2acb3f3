/** Training loop: mini-batch gradient descent with momentum, MSE loss,
input Gaussian-noise regularization, loss-curve CSV, and resumable
checkpoints. */

import * as fs from "node:fs";
import * as path from "node:path";

import { Dataset } from "./data.js";
import { Model, NetworkConfig, ParamLayer, mseLoss } from "./model.js";
import { Rng, RngState } from "./rng.js";
import { Tensor } from "./tensor.js";

export interface TrainConfig {
  batchSize: number;
  learningRate: number;
  lrDecay: number; // inverse-time decay constant; 0 keeps the rate constant
  warmupSteps: number; // linear ramp from 0 to the base rate
  momentum: number;
  clipNorm: number; // global gradient-norm clip; 0 disables
  inputNoiseSd: number;
  steps: number;
  seed: number;
  checkpointEvery: number;
  logEvery: number;
}

export function defaultTrainConfig(): TrainConfig {
  return {
    batchSize: 10,
    learningRate: 1e-5,
    lrDecay: 0,
    warmupSteps: 0,
    momentum: 0.9,
    clipNorm: 0,
    inputNoiseSd: 1.0,
    steps: 1000,
    seed: 0,
    checkpointEvery: 250,
    logEvery: 10,
  };
}

function clipGradients(layers: ParamLayer[], maxNorm: number): void {
  if (maxNorm <= 0) return;
  let norm2 = 0;
  for (const layer of layers) {
    for (const g of layer.gradWeight) norm2 += g * g;
    for (const g of layer.gradBias) norm2 += g * g;
  }
  const norm = Math.sqrt(norm2);
  if (norm <= maxNorm) return;
  const scale = maxNorm / norm;
  for (const layer of layers) {
    for (let i = 0; i < layer.gradWeight.length; i++) layer.gradWeight[i] *= scale;
    for (let i = 0; i < layer.gradBias.length; i++) layer.gradBias[i] *= scale;
  }
}

function sgdStep(layers: ParamLayer[], lr: number, momentum: number): void {
  for (const layer of layers) {
    for (let i = 0; i < layer.weight.length; i++) {
      layer.velWeight[i] = momentum * layer.velWeight[i] - lr * layer.gradWeight[i];
      layer.weight[i] += layer.velWeight[i];
    }
    for (let i = 0; i < layer.bias.length; i++) {
      layer.velBias[i] = momentum * layer.velBias[i] - lr * layer.gradBias[i];
      layer.bias[i] += layer.velBias[i];
    }
  }
}

export interface Checkpoint {
  step: number;
  networkConfig: NetworkConfig;
  trainConfig: TrainConfig;
  weights: Record<string, string>; // base64 float64
  biases: Record<string, string>;
  velWeights: Record<string, string>;
  velBiases: Record<string, string>;
  modelRng: RngState;
  trainRng: RngState;
  order: number[];
  cursor: number;
}

function encode(arr: Float64Array): string {
  return Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength).toString("base64");
}

function decodeInto(b64: string, arr: Float64Array): void {
  const buf = Buffer.from(b64, "base64");
  if (buf.length !== arr.byteLength) throw new Error("checkpoint tensor size mismatch");
  arr.set(new Float64Array(buf.buffer, buf.byteOffset, arr.length));
}

export function saveCheckpoint(
  file: string,
  model: Model,
  trainCfg: TrainConfig,
  trainRng: Rng,
  step: number,
  order: number[],
  cursor: number,
): void {
  const ckpt: Checkpoint = {
    step,
    networkConfig: model.cfg,
    trainConfig: trainCfg,
    weights: {},
    biases: {},
    velWeights: {},
    velBiases: {},
    modelRng: model.rng.state(),
    trainRng: trainRng.state(),
    order,
    cursor,
  };
  for (const layer of model.layers) {
    ckpt.weights[layer.name] = encode(layer.weight);
    ckpt.biases[layer.name] = encode(layer.bias);
    ckpt.velWeights[layer.name] = encode(layer.velWeight);
    ckpt.velBiases[layer.name] = encode(layer.velBias);
  }
  fs.writeFileSync(file, JSON.stringify(ckpt));
}

export function loadCheckpoint(file: string): { model: Model; ckpt: Checkpoint } {
  const ckpt: Checkpoint = JSON.parse(fs.readFileSync(file, "utf-8"));
  const model = new Model(ckpt.networkConfig);
  for (const layer of model.layers) {
    decodeInto(ckpt.weights[layer.name], layer.weight);
    decodeInto(ckpt.biases[layer.name], layer.bias);
    decodeInto(ckpt.velWeights[layer.name], layer.velWeight);
    decodeInto(ckpt.velBiases[layer.name], layer.velBias);
  }
  model.rng.restore(ckpt.modelRng);
  return { model, ckpt };
}

export interface TrainResult {
  losses: Array<{ step: number; loss: number; rmse: number }>;
  finalStep: number;
}

export interface TrainCallbacks {
  onStep?: (step: number, loss: number) => boolean | void; // return true to stop
}

/** Run (or resume) training; loss is MSE on the normalized output scale. */
export function train(
  model: Model,
  dataset: Dataset,
  cfg: TrainConfig,
  outDir: string,
  resume?: Checkpoint,
  callbacks: TrainCallbacks = {},
): TrainResult {
  fs.mkdirSync(outDir, { recursive: true });
  const n = dataset.inputs.length;
  const trainRng = new Rng(cfg.seed + 0x5eed);
  let order = Array.from({ length: n }, (_, i) => i);
  let cursor = 0;
  let startStep = 0;
  if (resume) {
    trainRng.restore(resume.trainRng);
    order = resume.order;
    cursor = resume.cursor;
    startStep = resume.step;
  } else {
    trainRng.shuffle(order);
  }

  const scale = model.cfg.outputScale;
  const offset = model.cfg.outputOffset;
  const losses: TrainResult["losses"] = [];
  const curvePath = path.join(outDir, "loss_curve.csv");
  if (!resume || !fs.existsSync(curvePath)) {
    fs.writeFileSync(curvePath, "step,loss,rmse_mps\n");
  }

  const h = dataset.channels;
  const w = dataset.rxSamples;
  const g = dataset.gtSize;

  for (let step = startStep; step < cfg.steps; step++) {
    model.zeroGrad();
    let batchLoss = 0;
    const batch = Math.min(cfg.batchSize, n);
    for (let b = 0; b < batch; b++) {
      if (cursor >= n) {
        trainRng.shuffle(order);
        cursor = 0;
      }
      const idx = order[cursor++];
      const x = Tensor.zeros([1, 1, h, w]);
      x.data.set(dataset.inputs[idx]);
      if (cfg.inputNoiseSd > 0) {
        for (let i = 0; i < x.size; i++) x.data[i] += cfg.inputNoiseSd * trainRng.normal();
      }
      const target = Tensor.zeros([1, g, g]);
      for (let i = 0; i < target.size; i++) {
        target.data[i] = (dataset.targets[idx][i] - offset) / scale;
      }
      const pred = model.forward(x, true);
      // normalize the prediction back to the loss scale
      const predNorm = Tensor.zeros(pred.shape);
      for (let i = 0; i < pred.size; i++) predNorm.data[i] = (pred.data[i] - offset) / scale;
      const { loss, grad } = mseLoss(predNorm, target);
      batchLoss += loss;
      // chain rule through the fixed affine: d(norm)/d(out m/s) = 1/scale
      const dOut = Tensor.zeros(pred.shape);
      for (let i = 0; i < grad.size; i++) dOut.data[i] = grad.data[i] / scale;
      model.backward(dOut);
    }
    // average the accumulated gradients over the batch
    for (const layer of model.layers) {
      for (let i = 0; i < layer.gradWeight.length; i++) layer.gradWeight[i] /= batch;
      for (let i = 0; i < layer.gradBias.length; i++) layer.gradBias[i] /= batch;
    }
    let lr = cfg.learningRate / (1 + cfg.lrDecay * step);
    if (cfg.warmupSteps > 0 && step < cfg.warmupSteps) {
      lr *= (step + 1) / cfg.warmupSteps;
    }
    clipGradients(model.layers, cfg.clipNorm);
    sgdStep(model.layers, lr, cfg.momentum);

    batchLoss /= batch;
    const rmseMps = Math.sqrt(batchLoss) * scale;
    if ((step + 1) % cfg.logEvery === 0 || step === startStep) {
      losses.push({ step: step + 1, loss: batchLoss, rmse: rmseMps });
      fs.appendFileSync(curvePath, `${step + 1},${batchLoss},${rmseMps}\n`);
    }
    if ((step + 1) % cfg.checkpointEvery === 0) {
      saveCheckpoint(
        path.join(outDir, "checkpoint.json"), model, cfg, trainRng, step + 1, order, cursor,
      );
    }
    if (callbacks.onStep && callbacks.onStep(step + 1, batchLoss)) {
      saveCheckpoint(
        path.join(outDir, "checkpoint.json"), model, cfg, trainRng, step + 1, order, cursor,
      );
      return { losses, finalStep: step + 1 };
    }
  }
  saveCheckpoint(
    path.join(outDir, "checkpoint.json"), model, cfg, trainRng, cfg.steps, order, cursor,
  );
  return { losses, finalStep: cfg.steps };
}

/** Dataset-level RMSE (m/s) of the model's deterministic predictions. */
export function evaluateRmse(model: Model, dataset: Dataset): number {
  let acc = 0;
  let count = 0;
  const h = dataset.channels;
  const w = dataset.rxSamples;
  for (let i = 0; i < dataset.inputs.length; i++) {
    const x = Tensor.zeros([1, 1, h, w]);
    x.data.set(dataset.inputs[i]);
    const pred = model.forward(x, false);
    for (let k = 0; k < pred.size; k++) {
      const d = pred.data[k] - dataset.targets[i][k];
      acc += d * d;
      count++;
    }
  }
  return Math.sqrt(acc / count);
}
