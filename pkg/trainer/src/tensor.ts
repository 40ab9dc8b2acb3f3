/** Minimal NCHW tensor on Float64Array. */

export class Tensor {
  constructor(
    public readonly data: Float64Array,
    public readonly shape: number[],
  ) {
    const n = shape.reduce((a, b) => a * b, 1);
    if (n !== data.length) {
      throw new Error(`shape ${shape} does not match buffer length ${data.length}`);
    }
  }

  static zeros(shape: number[]): Tensor {
    return new Tensor(new Float64Array(shape.reduce((a, b) => a * b, 1)), shape);
  }

  clone(): Tensor {
    return new Tensor(this.data.slice(), [...this.shape]);
  }

  get size(): number {
    return this.data.length;
  }
}

export function assertFinite(t: Tensor, label: string): void {
  for (let i = 0; i < t.data.length; i++) {
    if (!Number.isFinite(t.data[i])) {
      throw new Error(`non-finite value in ${label} at ${i}`);
    }
  }
}
