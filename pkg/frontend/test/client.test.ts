import { describe, expect, it } from 'vitest'
import { EngineClient, FetchLike } from '../src/client.js'
import { ResultMessage } from '../src/protocol.js'

function resultFor(revision: number, latex: string): ResultMessage {
  return { v: 1, revision, symbols: [], tree: { kind: 'row', children: [] }, latex, diagnostics: [] }
}

function makeServer() {
  // fake engine: serializes revisions in arrival order, records requests
  let revision = 0
  const seen: string[] = []
  let failNext = 0
  const fetchImpl: FetchLike = async (_url, init) => {
    if (failNext > 0) {
      failNext -= 1
      throw new Error('connection refused')
    }
    const message = JSON.parse(init.body)
    seen.push(message.op === 'add_stroke' ? message.stroke.id : message.op)
    if (message.op === 'create_session') {
      return { ok: true, json: async () => ({ v: 1, session: 's0', revision: 0 }) }
    }
    revision += 1
    return { ok: true, json: async () => resultFor(revision, `r${revision}`) }
  }
  return { fetchImpl, seen, fail: (n: number) => { failNext = n } }
}

describe('EngineClient', () => {
  it('processes queued strokes strictly in order with one in flight', async () => {
    const server = makeServer()
    const client = new EngineClient('http://engine', server.fetchImpl)
    await client.createSession()
    const results = await Promise.all([
      client.submitStroke({ id: 'a', points: [[0, 0, 0], [1, 1, 8]] }),
      client.submitStroke({ id: 'b', points: [[0, 0, 0], [1, 1, 8]] }),
      client.submitStroke({ id: 'c', points: [[0, 0, 0], [1, 1, 8]] }),
    ])
    expect(server.seen).toEqual(['create_session', 'a', 'b', 'c'])
    expect(results.map((r) => (r as ResultMessage).revision)).toEqual([1, 2, 3])
    expect(client.state.revision).toBe(3)
    expect(client.state.latex).toBe('r3')
  })

  it('never renders a lower revision after a higher one', async () => {
    const server = makeServer()
    const client = new EngineClient('http://engine', server.fetchImpl)
    await client.createSession()
    await client.submitStroke({ id: 'a', points: [[0, 0, 0], [1, 1, 8]] })
    // a stale message applied out of band must not roll the state back
    const stale = resultFor(0, 'stale')
    ;(client as unknown as { apply(m: ResultMessage): void }).apply(stale)
    expect(client.state.revision).toBe(1)
    expect(client.state.latex).toBe('r1')
  })

  it('keeps strokes queued while offline and replays in order on flush', async () => {
    const server = makeServer()
    const client = new EngineClient('http://engine', server.fetchImpl)
    await client.createSession()
    server.fail(1)
    const first = client.submitStroke({ id: 'a', points: [[0, 0, 0], [1, 1, 8]] })
    const second = client.submitStroke({ id: 'b', points: [[0, 0, 0], [1, 1, 8]] })
    // wait for the failed attempt to settle
    await new Promise((r) => setTimeout(r, 10))
    expect(client.state.connected).toBe(false)
    expect(client.state.pending).toBe(2)

    await client.flush()
    const [ra, rb] = await Promise.all([first, second])
    expect((ra as ResultMessage).revision).toBe(1)
    expect((rb as ResultMessage).revision).toBe(2)
    expect(server.seen).toEqual(['create_session', 'a', 'b'])
    expect(client.state.connected).toBe(true)
  })

  it('records error responses without breaking the session', async () => {
    const fetchImpl: FetchLike = async (_url, init) => {
      const message = JSON.parse(init.body)
      if (message.op === 'create_session') {
        return { ok: true, json: async () => ({ v: 1, session: 's0', revision: 0 }) }
      }
      return { ok: true, json: async () => ({ v: 1, error: { code: 'invalid', message: 'nope' } }) }
    }
    const client = new EngineClient('http://engine', fetchImpl)
    await client.createSession()
    const msg = await client.deleteStroke('missing')
    expect('error' in (msg as object)).toBe(true)
    expect(client.state.lastError).toBe('nope')
    expect(client.state.session).toBe('s0')
  })
})

describe('correction conflict rule', () => {
  it('a rejected correction refetches the snapshot to resync', async () => {
    const calls: string[] = []
    const fetchImpl: FetchLike = async (_url, init) => {
      const message = JSON.parse(init.body)
      calls.push(message.op)
      if (message.op === 'create_session') {
        return { ok: true, json: async () => ({ v: 1, session: 's0', revision: 0 }) }
      }
      if (message.op === 'correct') {
        return { ok: true, json: async () => ({ v: 1, error: { code: 'invalid', message: 'stale target' } }) }
      }
      return { ok: true, json: async () => resultFor(4, 'resynced') }
    }
    const client = new EngineClient('http://engine', fetchImpl)
    await client.createSession()
    const msg = await client.correctOrResync({ kind: 'stroke', id: 'gone' }, 'x')
    expect('error' in (msg as object)).toBe(true)
    expect(calls).toEqual(['create_session', 'correct', 'snapshot'])
    expect(client.state.revision).toBe(4)
    expect(client.state.latex).toBe('resynced')
  })
})
