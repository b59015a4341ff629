// Energy-threshold voice activity detection for the microphone mode.
//
// Deliberately simple: mean absolute amplitude against a threshold, with
// a hangover so brief dips inside speech do not end the utterance. The
// scripted-utterance picker is the primary input path; this is the
// experimental live mode.

export function frameEnergy(samples: Int16Array): number {
  if (samples.length === 0) {
    return 0;
  }
  let sum = 0;
  for (let i = 0; i < samples.length; i++) {
    sum += Math.abs(samples[i]);
  }
  return sum / samples.length / 32768;
}

export type VadEvent = "start" | "end" | null;

export class EnergyVad {
  active = false;
  private quietFrames = 0;

  constructor(
    readonly threshold = 0.02,
    readonly hangoverFrames = 5,
  ) {}

  update(frame: Int16Array): VadEvent {
    const loud = frameEnergy(frame) >= this.threshold;
    if (!this.active) {
      if (loud) {
        this.active = true;
        this.quietFrames = 0;
        return "start";
      }
      return null;
    }
    if (loud) {
      this.quietFrames = 0;
      return null;
    }
    this.quietFrames += 1;
    if (this.quietFrames >= this.hangoverFrames) {
      this.active = false;
      this.quietFrames = 0;
      return "end";
    }
    return null;
  }
}
