import { describe, expect, it } from "vitest";

import { CONDITIONS, CONDITION_LABELS, conditionIndex, TRIALS_PER_SESSION } from "../src/conditions.js";

describe("conditions", () => {
  it("defines exactly the 10 canonical conditions in hot-then-cold order", () => {
    expect(CONDITION_LABELS).toEqual([
      "WC-h", "GT-h", "WS-h", "FR-h", "MW-h",
      "WC-c", "GT-c", "WS-c", "FR-c", "MW-c",
    ]);
    expect(new Set(CONDITION_LABELS).size).toBe(10);
  });

  it("labels agree with their parts", () => {
    for (const condition of CONDITIONS) {
      expect(condition.label).toBe(`${condition.vibration}-${condition.thermal}`);
    }
  });

  it("maps labels to indexes and rejects unknowns", () => {
    expect(conditionIndex("WC-h")).toBe(0);
    expect(conditionIndex("MW-c")).toBe(9);
    expect(() => conditionIndex("XX-h")).toThrow();
  });

  it("session length is 50 trials", () => {
    expect(TRIALS_PER_SESSION).toBe(50);
  });
});
