/** Encoder-decoder network mapping RF channel data to an SoS map.

Seven convolutional stages contract the time axis (kernel widths 15 down
to 3, shrinking by 2 per stage); a width resize bridges the bottleneck to
a square lattice; four 2x upsampling stages expand to the output map with
skip connections concatenated from the matching-height encoder stages.
Layer 13 uses a 3x3 kernel and the final layer is a 1x1 convolution, with
a fixed affine (scale/offset) converting normalized output to m/s.
*/

import {
  Conv2d,
  Dropout,
  InstanceNorm,
  LeakyRelu,
  concatChannels,
  resizeWidth,
  resizeWidthBackward,
  splitChannels,
  upsample2x,
  upsample2xBackward,
} from "./layers.js";

export type ParamLayer = Conv2d | InstanceNorm;
import { Rng } from "./rng.js";
import { Tensor } from "./tensor.js";

export interface NetworkConfig {
  inputChannels: number; // transducer channels (image height)
  inputSamples: number; // receive samples per channel (image width)
  outputSize: number; // square SoS map side
  encoderChannels: number[]; // 7 entries
  decoderChannels: number[]; // 6 entries (stages 8-13)
  dropoutRate: number;
  normalization: "instance" | "none";
  outputScale: number; // m/s per normalized unit
  outputOffset: number; // m/s
  seed: number;
}

export function defaultConfig(
  inputChannels: number,
  inputSamples: number,
  outputSize: number,
  seed = 0,
): NetworkConfig {
  return {
    inputChannels,
    inputSamples,
    outputSize,
    encoderChannels: [8, 12, 16, 24, 24, 32, 32],
    decoderChannels: [24, 16, 12, 8, 8, 8],
    dropoutRate: 0.2,
    normalization: "instance",
    outputScale: 100.0,
    outputOffset: 1500.0,
    seed,
  };
}

const ENC_KERNEL_WIDTHS = [15, 13, 11, 9, 7, 5, 3];
const ENC_STRIDES: Array<[number, number]> = [
  [1, 2],
  [2, 2],
  [2, 2],
  [2, 2],
  [1, 2],
  [1, 2],
  [1, 1],
];
const DEC_KERNEL_WIDTHS = [5, 7, 9, 11, 13, 3]; // stages 8-13; stage 14 is 1x1
const DROPOUT_STAGES = new Set([3, 4, 6]); // encoder layers 4, 5, 7 (1-based)
const SKIP_SOURCES: Record<number, number> = { 0: 2, 1: 1, 2: 0 }; // decoder stage -> encoder stage

export class Model {
  readonly enc: Conv2d[] = [];
  readonly dec: Conv2d[] = [];
  readonly final: Conv2d;
  readonly encNorm: Array<InstanceNorm | null> = [];
  readonly decNorm: Array<InstanceNorm | null> = [];
  readonly encRelu: LeakyRelu[] = [];
  readonly decRelu: LeakyRelu[] = [];
  readonly dropout: Map<number, Dropout> = new Map();
  readonly rng: Rng;
  readonly bottleneck: number; // square side at the bridge

  // caches for the backward pass
  private encOutputs: Tensor[] = [];
  private skipWidths: number[] = [];
  private preBridgeWidth = 0;

  constructor(public readonly cfg: NetworkConfig) {
    if (cfg.encoderChannels.length !== 7 || cfg.decoderChannels.length !== 6) {
      throw new Error("expected 7 encoder and 6 decoder channel counts");
    }
    const s = cfg.outputSize / 16;
    if (!Number.isInteger(s)) {
      throw new Error(`output size ${cfg.outputSize} is not divisible by 16`);
    }
    if (cfg.inputChannels % 8 !== 0 || cfg.inputChannels / 8 !== s) {
      throw new Error(
        `schedule mismatch: ${cfg.inputChannels} channels cannot reach a ` +
          `${s}x${s} bottleneck by three height halvings`,
      );
    }
    if (cfg.inputSamples % 64 !== 0) {
      throw new Error(`receive length ${cfg.inputSamples} is not divisible by 64`);
    }
    this.bottleneck = s;
    this.rng = new Rng(cfg.seed);

    const useNorm = cfg.normalization === "instance";
    let cin = 1;
    for (let k = 0; k < 7; k++) {
      const [sh, sw] = ENC_STRIDES[k];
      this.enc.push(
        new Conv2d(`enc${k + 1}`, cin, cfg.encoderChannels[k], 3, ENC_KERNEL_WIDTHS[k], sh, sw, this.rng),
      );
      this.encNorm.push(useNorm ? new InstanceNorm(`enc${k + 1}.norm`, cfg.encoderChannels[k]) : null);
      this.encRelu.push(new LeakyRelu());
      if (DROPOUT_STAGES.has(k)) this.dropout.set(k, new Dropout(cfg.dropoutRate));
      cin = cfg.encoderChannels[k];
    }
    for (let k = 0; k < 6; k++) {
      const skipFrom = SKIP_SOURCES[k];
      const extra = skipFrom !== undefined ? cfg.encoderChannels[skipFrom] : 0;
      this.dec.push(
        new Conv2d(
          `dec${k + 8}`,
          cin + extra,
          cfg.decoderChannels[k],
          3,
          DEC_KERNEL_WIDTHS[k],
          1,
          1,
          this.rng,
        ),
      );
      // the last expanding stage (layer 13) keeps its raw scale so the
      // output head can recover absolute levels
      this.decNorm.push(useNorm && k < 5 ? new InstanceNorm(`dec${k + 8}.norm`, cfg.decoderChannels[k]) : null);
      this.decRelu.push(new LeakyRelu());
      cin = cfg.decoderChannels[k];
    }
    this.final = new Conv2d("out", cin, 1, 1, 1, 1, 1, this.rng);
  }

  get layers(): ParamLayer[] {
    const out: ParamLayer[] = [];
    for (let k = 0; k < 7; k++) {
      out.push(this.enc[k]);
      const nm = this.encNorm[k];
      if (nm) out.push(nm);
    }
    for (let k = 0; k < 6; k++) {
      out.push(this.dec[k]);
      const nm = this.decNorm[k];
      if (nm) out.push(nm);
    }
    out.push(this.final);
    return out;
  }

  get paramCount(): number {
    return this.layers.reduce((acc, l) => acc + l.paramCount, 0);
  }

  /** Forward pass: (N, channels, samples) input to (N, out, out) map in m/s. */
  forward(x: Tensor, train = false): Tensor {
    const [n] = x.shape;
    let t = x.shape.length === 3 ? new Tensor(x.data, [n, 1, x.shape[1], x.shape[2]]) : x;
    this.encOutputs = [];
    for (let k = 0; k < 7; k++) {
      t = this.enc[k].forward(t);
      const nm = this.encNorm[k];
      if (nm) t = nm.forward(t);
      t = this.encRelu[k].forward(t);
      const drop = this.dropout.get(k);
      if (drop) t = drop.forward(t, train, this.rng);
      this.encOutputs.push(t);
    }
    this.preBridgeWidth = t.shape[3];
    t = resizeWidth(t, this.bottleneck);

    this.skipWidths = [];
    for (let k = 0; k < 6; k++) {
      if (k < 4) t = upsample2x(t);
      const skipFrom = SKIP_SOURCES[k];
      if (skipFrom !== undefined) {
        const skip = this.encOutputs[skipFrom];
        this.skipWidths[k] = skip.shape[3];
        t = concatChannels(t, resizeWidth(skip, t.shape[3]));
      }
      t = this.dec[k].forward(t);
      const nm = this.decNorm[k];
      if (nm) t = nm.forward(t);
      t = this.decRelu[k].forward(t);
    }
    const raw = this.final.forward(t);
    const y = Tensor.zeros([n, this.cfg.outputSize, this.cfg.outputSize]);
    for (let i = 0; i < y.size; i++) {
      y.data[i] = raw.data[i] * this.cfg.outputScale + this.cfg.outputOffset;
    }
    return y;
  }

  /** Backward pass from d(loss)/d(output in m/s); accumulates layer grads. */
  backward(dOut: Tensor): void {
    const [n] = dOut.shape;
    const g = this.cfg.outputSize;
    let dt = new Tensor(
      Float64Array.from(dOut.data, (v) => v * this.cfg.outputScale),
      [n, 1, g, g],
    );
    dt = this.final.backward(dt);
    for (let k = 5; k >= 0; k--) {
      dt = this.decRelu[k].backward(dt);
      const nm = this.decNorm[k];
      if (nm) dt = nm.backward(dt);
      dt = this.dec[k].backward(dt);
      const skipFrom = SKIP_SOURCES[k];
      if (skipFrom !== undefined) {
        const mainChannels = dt.shape[1] - this.cfg.encoderChannels[skipFrom];
        const [dMain, dSkip] = splitChannels(dt, mainChannels);
        const dSkipOrig = resizeWidthBackward(dSkip, this.skipWidths[k]);
        this.pendingSkipGrads[skipFrom] = dSkipOrig;
        dt = dMain;
      }
      if (k < 4) dt = upsample2xBackward(dt);
    }
    dt = resizeWidthBackward(dt, this.preBridgeWidth);

    for (let k = 6; k >= 0; k--) {
      const extra = this.pendingSkipGrads[k];
      if (extra) {
        for (let i = 0; i < dt.size; i++) dt.data[i] += extra.data[i];
        delete this.pendingSkipGrads[k];
      }
      const drop = this.dropout.get(k);
      if (drop) dt = drop.backward(dt);
      dt = this.encRelu[k].backward(dt);
      const nm = this.encNorm[k];
      if (nm) dt = nm.backward(dt);
      dt = this.enc[k].backward(dt);
    }
  }

  private pendingSkipGrads: Record<number, Tensor> = {};

  zeroGrad(): void {
    for (const layer of this.layers) layer.zeroGrad();
  }
}

/** Truncated two-stage variant used for finite-difference gradient checks. */
export class TinyModel {
  readonly conv1: Conv2d;
  readonly conv2: Conv2d;
  readonly relu = new LeakyRelu();
  readonly outSize: number;
  private lastWidth = 0;

  constructor(seed: number, outSize = 4) {
    const rng = new Rng(seed);
    this.conv1 = new Conv2d("t1", 1, 2, 3, 5, 2, 2, rng);
    this.conv2 = new Conv2d("t2", 2, 1, 3, 3, 1, 1, rng);
    this.outSize = outSize;
  }

  get layers(): Conv2d[] {
    return [this.conv1, this.conv2];
  }

  get paramCount(): number {
    return this.conv1.paramCount + this.conv2.paramCount;
  }

  forward(x: Tensor): Tensor {
    let t = this.relu.forward(this.conv1.forward(x));
    t = this.conv2.forward(t);
    this.lastWidth = t.shape[3];
    return resizeWidth(t, this.outSize);
  }

  backward(dy: Tensor): void {
    let dt = resizeWidthBackward(dy, this.lastWidth);
    dt = this.conv2.backward(dt);
    this.conv1.backward(this.relu.backward(dt));
  }

  zeroGrad(): void {
    this.conv1.zeroGrad();
    this.conv2.zeroGrad();
  }
}

/** Mean squared error and its gradient with respect to the prediction. */
export function mseLoss(pred: Tensor, target: Tensor): { loss: number; grad: Tensor } {
  if (pred.size !== target.size) {
    throw new Error(`loss: size mismatch ${pred.shape} vs ${target.shape}`);
  }
  let acc = 0;
  const grad = Tensor.zeros(pred.shape);
  const inv = 1 / pred.size;
  for (let i = 0; i < pred.size; i++) {
    const d = pred.data[i] - target.data[i];
    acc += d * d;
    grad.data[i] = 2 * d * inv;
  }
  return { loss: acc * inv, grad };
}
