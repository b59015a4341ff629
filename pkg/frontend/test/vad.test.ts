import { describe, expect, it } from "vitest";

import { EnergyVad, frameEnergy } from "../src/vad";

const quiet = () => new Int16Array(160);
const loud = () => {
  const f = new Int16Array(160);
  f.fill(8000);
  return f;
};

describe("frameEnergy", () => {
  it("is zero for silence and empty frames", () => {
    expect(frameEnergy(quiet())).toBe(0);
    expect(frameEnergy(new Int16Array(0))).toBe(0);
  });

  it("scales with amplitude", () => {
    expect(frameEnergy(loud())).toBeCloseTo(8000 / 32768, 6);
  });
});

describe("EnergyVad", () => {
  it("fires start on the first loud frame only", () => {
    const vad = new EnergyVad(0.02, 3);
    expect(vad.update(quiet())).toBeNull();
    expect(vad.update(loud())).toBe("start");
    expect(vad.update(loud())).toBeNull();
    expect(vad.active).toBe(true);
  });

  it("needs the hangover of quiet frames to end", () => {
    const vad = new EnergyVad(0.02, 3);
    vad.update(loud());
    expect(vad.update(quiet())).toBeNull();
    expect(vad.update(quiet())).toBeNull();
    expect(vad.update(quiet())).toBe("end");
    expect(vad.active).toBe(false);
  });

  it("a loud dip resets the hangover", () => {
    const vad = new EnergyVad(0.02, 2);
    vad.update(loud());
    vad.update(quiet());
    expect(vad.update(loud())).toBeNull(); // still speaking
    vad.update(quiet());
    expect(vad.update(quiet())).toBe("end");
  });
});
