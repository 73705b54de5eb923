// Pointer capture: pointer-down .. pointer-up becomes one stroke.
//
// Samples are taken at native event rate with no client-side smoothing
// (the engine owns the feature pipeline). Canvas coordinates already
// match the ink convention (y grows downward); timestamps are integer
// milliseconds relative to the session start. A committed stroke is
// immutable: the canvas keeps drawing it from the acknowledged copy.

import { InkPointTriple, StrokePayload } from './protocol.js'

export interface CanvasStroke {
  payload: StrokePayload
  committed: boolean
  revision: number | null // server revision that acknowledged it
}

export class StrokeCapture {
  private points: InkPointTriple[] = []
  private active = false

  constructor(private sessionStart: number, private nextId: () => string) {}

  get isActive(): boolean {
    return this.active
  }

  begin(x: number, y: number, timestamp: number): void {
    this.active = true
    this.points = []
    this.extend(x, y, timestamp)
  }

  extend(x: number, y: number, timestamp: number): void {
    if (!this.active) return
    const t = Math.max(0, Math.round(timestamp - this.sessionStart))
    const last = this.points[this.points.length - 1]
    // non-decreasing timestamps, duplicate sample points are fine
    this.points.push([x, y, last ? Math.max(t, last[2]) : t])
  }

  end(x: number, y: number, timestamp: number): StrokePayload | null {
    if (!this.active) return null
    this.extend(x, y, timestamp)
    this.active = false
    if (this.points.length < 2) {
      // a tap: repeat the point so the stroke stays valid
      const [px, py, pt] = this.points[0]
      this.points.push([px, py, pt])
    }
    return { id: this.nextId(), points: this.points }
  }

  cancel(): void {
    this.active = false
    this.points = []
  }
}

export function makeStrokeIds(prefix = 'u'): () => string {
  let counter = 0
  return () => `${prefix}${counter++}`
}
