/** Gesture capture: raw pointer positions over the media canvas become one
 * batched wire payload on pointer-up. The client only normalizes coordinates;
 * classifying the gesture is the server's job. */

import type { ModeHint, PointerPayload, PointerSample } from "./types.js";

export type UiMode = "Select" | "Drag" | "Draw";

export function modeToHint(mode: UiMode): ModeHint {
  switch (mode) {
    case "Select":
      return "select";
    case "Drag":
      return "drag";
    case "Draw":
      return "draw";
  }
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

/** Map a canvas-pixel position to the normalized [0,1] wire coordinates. */
export function normalizeSample(
  px: number,
  py: number,
  width: number,
  height: number,
  tMs: number,
): PointerSample {
  if (width <= 0 || height <= 0) {
    throw new Error(`degenerate canvas size ${width}x${height}`);
  }
  return { x: clamp01(px / width), y: clamp01(py / height), t_ms: Math.max(0, tMs) };
}

/** Collects one gesture from pointer-down to pointer-up. Times are rebased so
 * the first sample is at t_ms = 0, matching what classification expects. */
export class GestureRecorder {
  private samples: PointerSample[] = [];
  private startedAt: number | null = null;

  get active(): boolean {
    return this.startedAt !== null;
  }

  begin(px: number, py: number, width: number, height: number, tMs: number): void {
    this.startedAt = tMs;
    this.samples = [normalizeSample(px, py, width, height, 0)];
  }

  move(px: number, py: number, width: number, height: number, tMs: number): void {
    if (this.startedAt === null) return; // hover outside a gesture
    const sample = normalizeSample(px, py, width, height, tMs - this.startedAt);
    const last = this.samples[this.samples.length - 1];
    if (last && last.x === sample.x && last.y === sample.y) return; // no motion
    this.samples.push(sample);
  }

  /** Finish the gesture and return its samples (always at least one). */
  end(px: number, py: number, width: number, height: number, tMs: number): PointerSample[] {
    if (this.startedAt === null) return [];
    this.move(px, py, width, height, tMs);
    const out = this.samples;
    this.samples = [];
    this.startedAt = null;
    return out;
  }

  cancel(): void {
    this.samples = [];
    this.startedAt = null;
  }
}

export function gesturePayload(
  target: string,
  samples: PointerSample[],
  mode: UiMode,
  utterance?: string,
): PointerPayload {
  const payload: PointerPayload = { target, samples, mode_hint: modeToHint(mode) };
  if (utterance && utterance.trim()) payload.utterance = utterance;
  return payload;
}
