import { describe, expect, it } from "vitest";
import { fitLoglogSlope, geomMean, maxOverMin } from "../src/stats.js";

describe("fitLoglogSlope", () => {
  it("recovers the exponent of an exact power law", () => {
    const x = [1e2, 1e3, 1e4, 1e5];
    const y = x.map((v) => 3.7 * Math.pow(v, -2));
    expect(fitLoglogSlope(x, y)).toBeCloseTo(-2, 12);
  });

  it("uses |x| like the backend", () => {
    const x = [-10, -100, -1000];
    const y = [1, 10, 100];
    expect(fitLoglogSlope(x, y)).toBeCloseTo(1, 12);
  });
});

describe("geomMean", () => {
  it("matches the closed form", () => {
    expect(geomMean([2, 8])).toBeCloseTo(4, 12);
  });
});

describe("maxOverMin", () => {
  it("is scale invariant", () => {
    expect(maxOverMin([2, 3, 6])).toBeCloseTo(3, 12);
  });
});
