// Workbench wiring: canvas capture, live result panels, corrections,
// retraining. All displayed labels, trees and LaTeX strings come verbatim
// from the engine's last response for the current revision.

import { EngineClient } from './client.js'
import { SymbolInfo } from './protocol.js'
import { CanvasStroke, StrokeCapture, makeStrokeIds } from './strokes.js'

const CONFIDENCE_COLORS: Array<[number, string]> = [
  [0.75, '#2e7d32'], // confident: green
  [0.4, '#e09f00'], // unsure: amber
  [0.0, '#c62828'], // low: red
]

function confidenceColor(confidence: number): string {
  for (const [floor, color] of CONFIDENCE_COLORS) {
    if (confidence >= floor) return color
  }
  return CONFIDENCE_COLORS[CONFIDENCE_COLORS.length - 1][1]
}

export class Workbench {
  private strokes: CanvasStroke[] = []
  private capture: StrokeCapture
  private ctx: CanvasRenderingContext2D

  constructor(
    private client: EngineClient,
    private canvas: HTMLCanvasElement,
    private panels: {
      latex: HTMLElement
      tree: HTMLElement
      symbols: HTMLElement
      status: HTMLElement
      diagnostics: HTMLElement
    },
  ) {
    this.capture = new StrokeCapture(performance.now(), makeStrokeIds())
    this.ctx = canvas.getContext('2d')!
    this.bindPointer()
    client.onChange(() => this.render())
  }

  private bindPointer(): void {
    const pos = (ev: PointerEvent): [number, number] => {
      const rect = this.canvas.getBoundingClientRect()
      return [ev.clientX - rect.left, ev.clientY - rect.top]
    }
    this.canvas.addEventListener('pointerdown', (ev) => {
      this.canvas.setPointerCapture(ev.pointerId)
      const [x, y] = pos(ev)
      this.capture.begin(x, y, ev.timeStamp)
    })
    this.canvas.addEventListener('pointermove', (ev) => {
      if (!this.capture.isActive) return
      const [x, y] = pos(ev)
      this.capture.extend(x, y, ev.timeStamp)
      this.render()
    })
    this.canvas.addEventListener('pointerup', (ev) => {
      const [x, y] = pos(ev)
      const payload = this.capture.end(x, y, ev.timeStamp)
      if (payload) void this.commitStroke(payload)
    })
    this.canvas.addEventListener('pointercancel', () => this.capture.cancel())
  }

  private async commitStroke(payload: CanvasStroke['payload']): Promise<void> {
    const stroke: CanvasStroke = { payload, committed: false, revision: null }
    this.strokes.push(stroke)
    this.render()
    const msg = await this.client.submitStroke(payload)
    if ('revision' in (msg as { revision?: number })) {
      stroke.committed = true
      stroke.revision = (msg as { revision: number }).revision
    } else {
      this.strokes = this.strokes.filter((s) => s !== stroke)
    }
    this.render()
  }

  async undo(): Promise<void> {
    const last = this.strokes[this.strokes.length - 1]
    if (!last || !last.committed) return
    await this.client.deleteStroke(last.payload.id)
    this.strokes.pop()
    this.render()
  }

  async clear(): Promise<void> {
    while (this.strokes.length) await this.undo()
  }

  async correctSymbol(symbol: SymbolInfo, newLabel: string): Promise<void> {
    // label corrections pin stroke-level labels; multi-stroke symbols pin
    // their first stroke (the engine regroups on re-analysis)
    await this.client.correctOrResync({ kind: 'stroke', id: symbol.strokes[0] }, newLabel)
  }

  async retrain(kind: 'ga' | 'cg'): Promise<void> {
    this.panels.status.textContent = `training (${kind})…`
    const msg = await this.client.train(kind)
    this.panels.status.textContent =
      'metrics' in (msg as object)
        ? `trained ${kind}: ${JSON.stringify((msg as { metrics: unknown }).metrics)}`
        : 'training failed'
  }

  render(): void {
    const { state } = this.client
    const ctx = this.ctx
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height)

    ctx.lineWidth = 2
    ctx.lineCap = 'round'
    ctx.strokeStyle = '#202020'
    for (const stroke of this.strokes) {
      ctx.beginPath()
      stroke.payload.points.forEach(([x, y], i) =>
        i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y))
      ctx.stroke()
    }

    for (const symbol of state.symbols) {
      const [x0, y0, x1, y1] = symbol.bbox
      ctx.strokeStyle = confidenceColor(symbol.confidence)
      ctx.lineWidth = 1
      ctx.strokeRect(x0 - 2, y0 - 2, x1 - x0 + 4, y1 - y0 + 4)
      ctx.fillStyle = ctx.strokeStyle
      ctx.font = '11px sans-serif'
      ctx.fillText(symbol.label, x0, Math.max(10, y0 - 4))
    }

    this.panels.latex.textContent = state.latex
    this.panels.tree.textContent = JSON.stringify(state.tree, null, 1) ?? ''
    this.panels.diagnostics.textContent = state.diagnostics.join('\n')
    this.panels.status.textContent = [
      `rev ${state.revision}`,
      state.connected ? 'online' : 'offline (queued: ' + state.pending + ')',
      state.retrain ? `retrain ${state.retrain}` : '',
      state.lastError ? `error: ${state.lastError}` : '',
    ].filter(Boolean).join(' · ')

    this.renderSymbolList(state.symbols)
  }

  private renderSymbolList(symbols: SymbolInfo[]): void {
    const container = this.panels.symbols
    container.textContent = ''
    for (const symbol of symbols) {
      const row = document.createElement('button')
      row.className = 'symbol'
      row.style.borderColor = confidenceColor(symbol.confidence)
      row.textContent = `${symbol.label} (${symbol.confidence.toFixed(2)})`
      row.title = 'click to correct this symbol'
      row.addEventListener('click', () => {
        const value = window.prompt(`correct “${symbol.label}” to:`, symbol.label)
        if (value && value !== symbol.label) void this.correctSymbol(symbol, value)
      })
      container.appendChild(row)
    }
  }
}
