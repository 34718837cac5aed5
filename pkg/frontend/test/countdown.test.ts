import { describe, expect, it } from "vitest";

import { estimateSkew, formatCountdown, minutesLeft, remainingMs } from "../src/countdown.js";

describe("countdown math", () => {
  it("derives remaining time from the absolute deadline and skew", () => {
    // server is 10s ahead of the local clock
    const skew = estimateSkew(10_000, 0);
    expect(skew).toBe(10_000);
    // deadline in 25 server-minutes; locally at t=0 that is 25m minus nothing
    expect(remainingMs(10_000 + 25 * 60_000, skew, 0)).toBe(25 * 60_000);
  });

  it("clamps at zero and handles a missing deadline", () => {
    expect(remainingMs(1_000, 0, 5_000)).toBe(0);
    expect(remainingMs(null, 0, 5_000)).toBe(0);
  });

  it("rounds minutes up: 61 seconds reads as 2 minutes", () => {
    expect(minutesLeft(61_000)).toBe(2);
    expect(minutesLeft(60_000)).toBe(1);
    expect(minutesLeft(0)).toBe(0);
  });

  it("formats mm:ss", () => {
    expect(formatCountdown(15 * 60_000)).toBe("15:00");
    expect(formatCountdown(61_000)).toBe("01:01");
    expect(formatCountdown(0)).toBe("00:00");
  });
});
