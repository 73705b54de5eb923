// Engine client over the HTTP request/response mapping.
//
// Invariants the workbench relies on:
//   - one in-flight request per session, others wait in an ordered queue;
//   - displayed state is byte-equal to the last server result message for
//     the current revision (no client-side recognition);
//   - a lower revision never overwrites a higher one;
//   - when the engine is unreachable, queued messages stay queued and
//     replay in order once flush() succeeds.

import {
  PROTOCOL_VERSION,
  RequestMessage,
  ResultMessage,
  ServerMessage,
  StrokePayload,
  isError,
  isResult,
} from './protocol.js'

export type FetchLike = (url: string, init: {
  method: string
  headers: Record<string, string>
  body: string
}) => Promise<{ ok: boolean; json(): Promise<unknown> }>

export interface ClientState {
  session: string | null
  revision: number
  latex: string
  symbols: ResultMessage['symbols']
  tree: unknown
  diagnostics: string[]
  connected: boolean
  pending: number
  lastError: string | null
  retrain: string | null
}

interface QueueEntry {
  message: RequestMessage
  resolve: (msg: ServerMessage) => void
  reject: (err: Error) => void
}

export class EngineClient {
  private queue: QueueEntry[] = []
  private inFlight = false
  private listeners: Array<(s: ClientState) => void> = []

  readonly state: ClientState = {
    session: null,
    revision: 0,
    latex: '',
    symbols: [],
    tree: null,
    diagnostics: [],
    connected: true,
    pending: 0,
    lastError: null,
    retrain: null,
  }

  constructor(private baseUrl: string, private fetchImpl: FetchLike) {}

  onChange(listener: (s: ClientState) => void): void {
    this.listeners.push(listener)
  }

  private emit(): void {
    this.state.pending = this.queue.length + (this.inFlight ? 1 : 0)
    for (const listener of this.listeners) listener(this.state)
  }

  async createSession(): Promise<string> {
    const msg = await this.enqueue({ op: 'create_session', v: PROTOCOL_VERSION })
    if (isError(msg)) throw new Error(msg.error.message)
    const session = (msg as { session: string }).session
    this.state.session = session
    this.state.revision = 0
    this.emit()
    return session
  }

  submitStroke(stroke: StrokePayload): Promise<ServerMessage> {
    return this.enqueue({
      op: 'add_stroke', v: PROTOCOL_VERSION,
      session: this.requireSession(), stroke,
    })
  }

  deleteStroke(strokeId: string): Promise<ServerMessage> {
    return this.enqueue({
      op: 'delete_stroke', v: PROTOCOL_VERSION,
      session: this.requireSession(), stroke_id: strokeId,
    })
  }

  correct(target: Record<string, unknown>, value: unknown): Promise<ServerMessage> {
    return this.enqueue({
      op: 'correct', v: PROTOCOL_VERSION,
      session: this.requireSession(), target, value,
    })
  }

  /** Correction with the conflict rule: a rejected (stale) correction
   *  refetches the current snapshot so the panels resync. */
  async correctOrResync(target: Record<string, unknown>, value: unknown): Promise<ServerMessage> {
    const msg = await this.correct(target, value)
    if (isError(msg)) {
      await this.snapshot()
    }
    return msg
  }

  snapshot(): Promise<ServerMessage> {
    return this.enqueue({
      op: 'snapshot', v: PROTOCOL_VERSION, session: this.requireSession(),
    })
  }

  train(kind: 'ga' | 'cg'): Promise<ServerMessage> {
    return this.enqueue({ op: 'train', v: PROTOCOL_VERSION, kind })
  }

  private requireSession(): string {
    if (!this.state.session) throw new Error('no session: call createSession first')
    return this.state.session
  }

  private enqueue(message: RequestMessage): Promise<ServerMessage> {
    return new Promise((resolve, reject) => {
      this.queue.push({ message, resolve, reject })
      this.emit()
      void this.pump()
    })
  }

  /** Retry delivery after a connection failure; queued order is preserved. */
  async flush(): Promise<void> {
    await this.pump()
  }

  private async pump(): Promise<void> {
    if (this.inFlight) return
    const entry = this.queue[0]
    if (!entry) return
    this.inFlight = true
    this.emit()
    let payload: unknown
    try {
      const response = await this.fetchImpl(this.baseUrl + '/rpc', {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(entry.message),
      })
      payload = await response.json()
    } catch (err) {
      // unreachable engine: keep the entry queued for replay on reconnect
      this.inFlight = false
      this.state.connected = false
      this.state.lastError = err instanceof Error ? err.message : String(err)
      this.emit()
      return
    }
    this.queue.shift()
    this.inFlight = false
    this.state.connected = true
    this.state.lastError = null
    const msg = payload as ServerMessage
    this.apply(msg)
    entry.resolve(msg)
    this.emit()
    void this.pump()
  }

  private apply(msg: ServerMessage): void {
    if (isError(msg)) {
      this.state.lastError = msg.error.message
      return
    }
    if (isResult(msg)) {
      if (msg.revision < this.state.revision) return // never render backwards
      this.state.revision = msg.revision
      this.state.latex = msg.latex
      this.state.symbols = msg.symbols
      this.state.tree = msg.tree
      this.state.diagnostics = msg.diagnostics
      this.state.retrain = msg.retrain ?? null
    }
  }
}
