import { describe, expect, it } from "vitest";

import { displayRational, formatApprox, formatExact, parseRational } from "../src/rationals.js";

describe("rational rendering", () => {
  it("parses num/den strings exactly", () => {
    expect(parseRational("80/1")).toEqual({ num: 80n, den: 1n });
    expect(parseRational("-65/1")).toEqual({ num: -65n, den: 1n });
    expect(parseRational("7")).toEqual({ num: 7n, den: 1n });
  });

  it("rejects junk", () => {
    expect(() => parseRational("1.5")).toThrow();
    expect(() => parseRational("1/0")).toThrow();
    expect(() => parseRational("")).toThrow();
  });

  it("formats exactly, reducing", () => {
    expect(displayRational("-65/1")).toBe("-65");
    expect(displayRational("6/4")).toBe("3/2");
    expect(formatExact({ num: 355n, den: 113n })).toBe("355/113");
  });

  it("keeps huge values exact where floats would lose precision", () => {
    const text = "12345678901234567890123/1";
    expect(displayRational(text)).toBe("12345678901234567890123");
  });

  it("labels approximations separately", () => {
    expect(formatApprox(parseRational("1/3"))).toBe("0.333");
    expect(formatApprox(parseRational("-65/1"))).toBe("-65");
    expect(formatApprox(parseRational("-1/2"))).toBe("-0.5");
  });
});
