/** SplitMix64 over BigInt; used only for weight/frame initialization. */

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + GOLDEN) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
    return (z ^ (z >> 31n)) & MASK;
  }

  /** Uniform in [0, 1) from the top 53 bits. */
  nextUnit(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  /** Uniform in [-scale, scale). */
  nextSymmetric(scale: number): number {
    return (this.nextUnit() * 2 - 1) * scale;
  }

  fill(target: Float32Array, scale: number): Float32Array {
    for (let i = 0; i < target.length; i++) {
      target[i] = this.nextSymmetric(scale);
    }
    return target;
  }
}
