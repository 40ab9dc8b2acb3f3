/** Network building blocks with explicit forward/backward passes (NCHW). */

import { Rng } from "./rng.js";
import { Tensor } from "./tensor.js";

/** 2D convolution, "same" padding, configurable stride. */
export class Conv2d {
  readonly weight: Float64Array; // [co, ci, kh, kw]
  readonly bias: Float64Array;
  readonly gradWeight: Float64Array;
  readonly gradBias: Float64Array;
  readonly velWeight: Float64Array;
  readonly velBias: Float64Array;
  private lastInput: Tensor | null = null;

  constructor(
    public readonly name: string,
    public readonly cin: number,
    public readonly cout: number,
    public readonly kh: number,
    public readonly kw: number,
    public readonly sh: number,
    public readonly sw: number,
    rng: Rng,
  ) {
    const n = cout * cin * kh * kw;
    this.weight = new Float64Array(n);
    this.bias = new Float64Array(cout);
    this.gradWeight = new Float64Array(n);
    this.gradBias = new Float64Array(cout);
    this.velWeight = new Float64Array(n);
    this.velBias = new Float64Array(cout);
    // Xavier (Glorot) uniform initialization
    const fanIn = cin * kh * kw;
    const fanOut = cout * kh * kw;
    const limit = Math.sqrt(6 / (fanIn + fanOut));
    for (let i = 0; i < n; i++) this.weight[i] = rng.range(-limit, limit);
  }

  get paramCount(): number {
    return this.weight.length + this.bias.length;
  }

  outShape(h: number, w: number): [number, number] {
    return [Math.ceil(h / this.sh), Math.ceil(w / this.sw)];
  }

  private padding(h: number, w: number): [number, number] {
    const [oh, ow] = this.outShape(h, w);
    const padH = Math.max(0, (oh - 1) * this.sh + this.kh - h);
    const padW = Math.max(0, (ow - 1) * this.sw + this.kw - w);
    return [padH >> 1, padW >> 1];
  }

  forward(x: Tensor): Tensor {
    const [n, ci, h, w] = x.shape;
    if (ci !== this.cin) throw new Error(`${this.name}: expected ${this.cin} channels, got ${ci}`);
    const [oh, ow] = this.outShape(h, w);
    const [pt, pl] = this.padding(h, w);
    const y = Tensor.zeros([n, this.cout, oh, ow]);
    const xd = x.data;
    const yd = y.data;
    const wd = this.weight;
    const { kh, kw, sh, sw } = this;
    for (let b = 0; b < n; b++) {
      const xb = b * ci * h * w;
      const yb = b * this.cout * oh * ow;
      for (let co = 0; co < this.cout; co++) {
        const wc = co * ci * kh * kw;
        const yc = yb + co * oh * ow;
        const bias = this.bias[co];
        for (let oy = 0; oy < oh; oy++) {
          const iy0 = oy * sh - pt;
          const kyLo = Math.max(0, -iy0);
          const kyHi = Math.min(kh, h - iy0);
          const yrow = yc + oy * ow;
          for (let ox = 0; ox < ow; ox++) {
            const ix0 = ox * sw - pl;
            const kxLo = Math.max(0, -ix0);
            const kxHi = Math.min(kw, w - ix0);
            let acc = bias;
            for (let c = 0; c < ci; c++) {
              const xc = xb + c * h * w + ix0;
              const wk = wc + c * kh * kw;
              for (let ky = kyLo; ky < kyHi; ky++) {
                const xrow = xc + (iy0 + ky) * w;
                const wrow = wk + ky * kw;
                for (let kx = kxLo; kx < kxHi; kx++) {
                  acc += wd[wrow + kx] * xd[xrow + kx];
                }
              }
            }
            yd[yrow + ox] = acc;
          }
        }
      }
    }
    this.lastInput = x;
    return y;
  }

  backward(dy: Tensor): Tensor {
    const x = this.lastInput;
    if (!x) throw new Error(`${this.name}: backward before forward`);
    const [n, ci, h, w] = x.shape;
    const [, , oh, ow] = dy.shape;
    const [pt, pl] = this.padding(h, w);
    const dx = Tensor.zeros(x.shape);
    const xd = x.data;
    const dyd = dy.data;
    const dxd = dx.data;
    const wd = this.weight;
    const gw = this.gradWeight;
    const gb = this.gradBias;
    const { kh, kw, sh, sw } = this;
    for (let b = 0; b < n; b++) {
      const xb = b * ci * h * w;
      const yb = b * this.cout * oh * ow;
      for (let co = 0; co < this.cout; co++) {
        const wc = co * ci * kh * kw;
        const yc = yb + co * oh * ow;
        for (let oy = 0; oy < oh; oy++) {
          const iy0 = oy * sh - pt;
          const kyLo = Math.max(0, -iy0);
          const kyHi = Math.min(kh, h - iy0);
          const yrow = yc + oy * ow;
          for (let ox = 0; ox < ow; ox++) {
            const g = dyd[yrow + ox];
            if (g === 0) continue;
            const ix0 = ox * sw - pl;
            const kxLo = Math.max(0, -ix0);
            const kxHi = Math.min(kw, w - ix0);
            gb[co] += g;
            for (let c = 0; c < ci; c++) {
              const xc = xb + c * h * w + ix0;
              const wk = wc + c * kh * kw;
              for (let ky = kyLo; ky < kyHi; ky++) {
                const xrow = xc + (iy0 + ky) * w;
                const wrow = wk + ky * kw;
                for (let kx = kxLo; kx < kxHi; kx++) {
                  gw[wrow + kx] += g * xd[xrow + kx];
                  dxd[xrow + kx] += g * wd[wrow + kx];
                }
              }
            }
          }
        }
      }
    }
    return dx;
  }

  zeroGrad(): void {
    this.gradWeight.fill(0);
    this.gradBias.fill(0);
  }
}

/** Leaky rectifier; the small negative slope keeps gradients alive. */
export class LeakyRelu {
  private mask: Uint8Array | null = null;

  constructor(public readonly slope = 0.1) {}

  forward(x: Tensor): Tensor {
    const y = Tensor.zeros(x.shape);
    const mask = new Uint8Array(x.size);
    for (let i = 0; i < x.size; i++) {
      if (x.data[i] > 0) {
        y.data[i] = x.data[i];
        mask[i] = 1;
      } else {
        y.data[i] = this.slope * x.data[i];
      }
    }
    this.mask = mask;
    return y;
  }

  backward(dy: Tensor): Tensor {
    if (!this.mask) throw new Error("relu: backward before forward");
    const dx = Tensor.zeros(dy.shape);
    for (let i = 0; i < dy.size; i++) {
      dx.data[i] = this.mask[i] ? dy.data[i] : this.slope * dy.data[i];
    }
    return dx;
  }
}

/** Per-sample, per-channel normalization over the spatial axes.

Exposes the same parameter surface as Conv2d (weight = scale, bias =
offset) so the optimizer and checkpoints treat both uniformly. Stateless
across samples: inference is deterministic with no running statistics.
*/
export class InstanceNorm {
  readonly weight: Float64Array;
  readonly bias: Float64Array;
  readonly gradWeight: Float64Array;
  readonly gradBias: Float64Array;
  readonly velWeight: Float64Array;
  readonly velBias: Float64Array;
  private lastXhat: Float64Array | null = null;
  private lastInvStd: Float64Array | null = null;
  private lastShape: number[] = [];

  constructor(
    public readonly name: string,
    public readonly channels: number,
    public readonly eps = 1e-3,
  ) {
    this.weight = new Float64Array(channels).fill(1);
    this.bias = new Float64Array(channels);
    this.gradWeight = new Float64Array(channels);
    this.gradBias = new Float64Array(channels);
    this.velWeight = new Float64Array(channels);
    this.velBias = new Float64Array(channels);
  }

  get paramCount(): number {
    return 2 * this.channels;
  }

  forward(x: Tensor): Tensor {
    const [n, c, h, w] = x.shape;
    const plane = h * w;
    const y = Tensor.zeros(x.shape);
    const xhat = new Float64Array(x.size);
    const invStd = new Float64Array(n * c);
    for (let b = 0; b < n; b++) {
      for (let ch = 0; ch < c; ch++) {
        const off = (b * c + ch) * plane;
        let mean = 0;
        for (let i = 0; i < plane; i++) mean += x.data[off + i];
        mean /= plane;
        let varAcc = 0;
        for (let i = 0; i < plane; i++) {
          const d = x.data[off + i] - mean;
          varAcc += d * d;
        }
        const inv = 1 / Math.sqrt(varAcc / plane + this.eps);
        invStd[b * c + ch] = inv;
        const g = this.weight[ch];
        const bb = this.bias[ch];
        for (let i = 0; i < plane; i++) {
          const xh = (x.data[off + i] - mean) * inv;
          xhat[off + i] = xh;
          y.data[off + i] = g * xh + bb;
        }
      }
    }
    this.lastXhat = xhat;
    this.lastInvStd = invStd;
    this.lastShape = [...x.shape];
    return y;
  }

  backward(dy: Tensor): Tensor {
    const xhat = this.lastXhat;
    const invStd = this.lastInvStd;
    if (!xhat || !invStd) throw new Error(`${this.name}: backward before forward`);
    const [n, c, h, w] = this.lastShape;
    const plane = h * w;
    const dx = Tensor.zeros(dy.shape);
    for (let b = 0; b < n; b++) {
      for (let ch = 0; ch < c; ch++) {
        const off = (b * c + ch) * plane;
        const g = this.weight[ch];
        let sumDy = 0;
        let sumDyXhat = 0;
        for (let i = 0; i < plane; i++) {
          const d = dy.data[off + i];
          sumDy += d;
          sumDyXhat += d * xhat[off + i];
        }
        this.gradBias[ch] += sumDy;
        this.gradWeight[ch] += sumDyXhat;
        const inv = invStd[b * c + ch];
        const k = g * inv;
        for (let i = 0; i < plane; i++) {
          dx.data[off + i] =
            k * (dy.data[off + i] - sumDy / plane - (xhat[off + i] * sumDyXhat) / plane);
        }
      }
    }
    return dx;
  }

  zeroGrad(): void {
    this.gradWeight.fill(0);
    this.gradBias.fill(0);
  }
}

/** Inverted dropout; identity when rate is 0 or at inference. */
export class Dropout {
  private mask: Float64Array | null = null;

  constructor(public readonly rate: number) {}

  forward(x: Tensor, train: boolean, rng: Rng): Tensor {
    if (!train || this.rate === 0) {
      this.mask = null;
      return x;
    }
    const keep = 1 - this.rate;
    const mask = new Float64Array(x.size);
    const y = Tensor.zeros(x.shape);
    for (let i = 0; i < x.size; i++) {
      const m = rng.uniform() < keep ? 1 / keep : 0;
      mask[i] = m;
      y.data[i] = x.data[i] * m;
    }
    this.mask = mask;
    return y;
  }

  backward(dy: Tensor): Tensor {
    if (!this.mask) return dy;
    const dx = Tensor.zeros(dy.shape);
    for (let i = 0; i < dy.size; i++) dx.data[i] = dy.data[i] * this.mask[i];
    return dx;
  }
}

/** Nearest-neighbor 2x upsampling of both spatial axes. */
export function upsample2x(x: Tensor): Tensor {
  const [n, c, h, w] = x.shape;
  const y = Tensor.zeros([n, c, 2 * h, 2 * w]);
  for (let b = 0; b < n; b++) {
    for (let ch = 0; ch < c; ch++) {
      const xo = (b * c + ch) * h * w;
      const yo = (b * c + ch) * 4 * h * w;
      for (let i = 0; i < h; i++) {
        for (let j = 0; j < w; j++) {
          const v = x.data[xo + i * w + j];
          const base = yo + 2 * i * 2 * w + 2 * j;
          y.data[base] = v;
          y.data[base + 1] = v;
          y.data[base + 2 * w] = v;
          y.data[base + 2 * w + 1] = v;
        }
      }
    }
  }
  return y;
}

export function upsample2xBackward(dy: Tensor): Tensor {
  const [n, c, h2, w2] = dy.shape;
  const h = h2 / 2;
  const w = w2 / 2;
  const dx = Tensor.zeros([n, c, h, w]);
  for (let b = 0; b < n; b++) {
    for (let ch = 0; ch < c; ch++) {
      const xo = (b * c + ch) * h * w;
      const yo = (b * c + ch) * h2 * w2;
      for (let i = 0; i < h; i++) {
        for (let j = 0; j < w; j++) {
          const base = yo + 2 * i * w2 + 2 * j;
          dx.data[xo + i * w + j] =
            dy.data[base] + dy.data[base + 1] + dy.data[base + w2] + dy.data[base + w2 + 1];
        }
      }
    }
  }
  return dx;
}

/** Bilinear resampling along the width axis only (heights already match). */
export function resizeWidthWeights(win: number, wout: number): Array<[number, number, number]> {
  const table: Array<[number, number, number]> = [];
  for (let xo = 0; xo < wout; xo++) {
    const pos = ((xo + 0.5) * win) / wout - 0.5;
    const k = Math.floor(pos);
    const frac = pos - k;
    const k0 = Math.min(Math.max(k, 0), win - 1);
    const k1 = Math.min(Math.max(k + 1, 0), win - 1);
    table.push([k0, k1, frac]);
  }
  return table;
}

export function resizeWidth(x: Tensor, wout: number): Tensor {
  const [n, c, h, win] = x.shape;
  const table = resizeWidthWeights(win, wout);
  const y = Tensor.zeros([n, c, h, wout]);
  for (let plane = 0; plane < n * c * h; plane++) {
    const xo = plane * win;
    const yo = plane * wout;
    for (let j = 0; j < wout; j++) {
      const [k0, k1, f] = table[j];
      y.data[yo + j] = (1 - f) * x.data[xo + k0] + f * x.data[xo + k1];
    }
  }
  return y;
}

export function resizeWidthBackward(dy: Tensor, win: number): Tensor {
  const [n, c, h, wout] = dy.shape;
  const table = resizeWidthWeights(win, wout);
  const dx = Tensor.zeros([n, c, h, win]);
  for (let plane = 0; plane < n * c * h; plane++) {
    const xo = plane * win;
    const yo = plane * wout;
    for (let j = 0; j < wout; j++) {
      const [k0, k1, f] = table[j];
      dx.data[xo + k0] += (1 - f) * dy.data[yo + j];
      dx.data[xo + k1] += f * dy.data[yo + j];
    }
  }
  return dx;
}

/** Channel concatenation of two NCHW tensors with matching spatial shape. */
export function concatChannels(a: Tensor, b: Tensor): Tensor {
  const [n, ca, h, w] = a.shape;
  const cb = b.shape[1];
  if (b.shape[0] !== n || b.shape[2] !== h || b.shape[3] !== w) {
    throw new Error(`concat: spatial mismatch ${a.shape} vs ${b.shape}`);
  }
  const y = Tensor.zeros([n, ca + cb, h, w]);
  const plane = h * w;
  for (let bn = 0; bn < n; bn++) {
    y.data.set(a.data.subarray(bn * ca * plane, (bn + 1) * ca * plane), bn * (ca + cb) * plane);
    y.data.set(
      b.data.subarray(bn * cb * plane, (bn + 1) * cb * plane),
      bn * (ca + cb) * plane + ca * plane,
    );
  }
  return y;
}

export function splitChannels(dy: Tensor, ca: number): [Tensor, Tensor] {
  const [n, c, h, w] = dy.shape;
  const cb = c - ca;
  const da = Tensor.zeros([n, ca, h, w]);
  const db = Tensor.zeros([n, cb, h, w]);
  const plane = h * w;
  for (let bn = 0; bn < n; bn++) {
    da.data.set(
      dy.data.subarray(bn * c * plane, bn * c * plane + ca * plane),
      bn * ca * plane,
    );
    db.data.set(
      dy.data.subarray(bn * c * plane + ca * plane, (bn + 1) * c * plane),
      bn * cb * plane,
    );
  }
  return [da, db];
}
