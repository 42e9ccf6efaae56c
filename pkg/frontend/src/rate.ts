// Outbound control throttle: the newest sample wins, sends are spaced so
// the wire rate stays within the configured ceiling no matter how fast the
// input device fires.

export class ControlThrottle {
  private lastSent = -Infinity;
  private pending: number[] | null = null;
  readonly minInterval: number;

  constructor(maxPerSecond = 120, private readonly now: () => number = () => performance.now() / 1000) {
    this.minInterval = 1 / maxPerSecond;
  }

  /** Offer a sample; returns the sample to send now, or null to hold it. */
  offer(u0: number[]): number[] | null {
    const t = this.now();
    if (t - this.lastSent >= this.minInterval) {
      this.lastSent = t;
      this.pending = null;
      return u0;
    }
    this.pending = u0;
    return null;
  }

  /** Sample due for a delayed flush, if the interval has elapsed. */
  drain(): number[] | null {
    if (this.pending === null) return null;
    const t = this.now();
    if (t - this.lastSent < this.minInterval) return null;
    this.lastSent = t;
    const out = this.pending;
    this.pending = null;
    return out;
  }
}
