// Wire protocol shapes (HTTP mapping of the engine service). Every message
// and response carries v: 1. The workbench never interprets recognition
// results beyond displaying them: labels, trees and LaTeX are shown exactly
// as the engine sent them.

export const PROTOCOL_VERSION = 1

export type InkPointTriple = [number, number, number] // x, y, t(ms)

export interface StrokePayload {
  id: string
  points: InkPointTriple[]
}

export interface SymbolInfo {
  id: string
  label: string
  confidence: number
  bbox: [number, number, number, number]
  strokes: string[]
}

export interface ResultMessage {
  v: number
  revision: number
  symbols: SymbolInfo[]
  tree: unknown
  latex: string
  diagnostics: string[]
  retrain?: string
}

export interface SessionCreated {
  v: number
  session: string
  revision: number
}

export interface TrainedMessage {
  v: number
  trained: string
  metrics: Record<string, unknown>
}

export interface ErrorMessage {
  v: number
  error: { code: string; message: string }
}

export type ServerMessage =
  | ResultMessage
  | SessionCreated
  | TrainedMessage
  | ErrorMessage

export function isError(msg: ServerMessage): msg is ErrorMessage {
  return typeof msg === 'object' && msg !== null && 'error' in msg
}

export function isResult(msg: ServerMessage): msg is ResultMessage {
  return typeof msg === 'object' && msg !== null && 'revision' in msg && 'latex' in msg
}

export type RequestMessage =
  | { op: 'create_session'; v: number }
  | { op: 'add_stroke'; v: number; session: string; stroke: StrokePayload }
  | { op: 'delete_stroke'; v: number; session: string; stroke_id: string }
  | { op: 'correct'; v: number; session: string; target: Record<string, unknown>; value: unknown }
  | { op: 'snapshot'; v: number; session: string }
  | { op: 'train'; v: number; kind: 'ga' | 'cg' }
