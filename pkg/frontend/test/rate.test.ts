import { describe, expect, it } from "vitest";

import { ControlThrottle } from "../src/rate.js";

function clockAt(times: { t: number }) {
  return () => times.t;
}

describe("ControlThrottle", () => {
  it("never exceeds the configured rate no matter how fast input arrives", () => {
    const clock = { t: 0 };
    const throttle = new ControlThrottle(120, clockAt(clock));
    let sent = 0;
    for (let k = 0; k < 10_000; k++) {
      clock.t = k * 0.0001; // 10 kHz input device
      if (throttle.offer([k]) !== null) sent++;
    }
    // one second of wall time admits at most 120 sends (+1 initial edge)
    expect(sent).toBeLessThanOrEqual(121);
    expect(sent).toBeGreaterThan(100);
  });

  it("holds the newest sample and drains it when the window reopens", () => {
    const clock = { t: 0 };
    const throttle = new ControlThrottle(100, clockAt(clock));
    expect(throttle.offer([1])).toEqual([1]);
    expect(throttle.offer([2])).toBeNull();
    expect(throttle.offer([3])).toBeNull();
    expect(throttle.drain()).toBeNull(); // window still closed
    clock.t = 0.011;
    expect(throttle.drain()).toEqual([3]); // newest wins
    expect(throttle.drain()).toBeNull();
  });
});
