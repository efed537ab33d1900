/**
 * Wire protocol: 4-byte big-endian length prefix + compact sorted-key JSON,
 * per PROTOCOL.md. Transport-agnostic: encode to bytes, feed received byte
 * chunks to a FrameDecoder.
 */

export const MAX_MESSAGE = 1 << 20

export interface ReferenceObject {
  memid: string
  class_label: string
  position: [number, number]
  radius: number
  last_seen_tick: number
  tags: string[]
}

export interface TaskRow {
  task_id: number
  kind: string
  status: string
  priority: number
  detail: string
}

export interface DialogueRow {
  kind: string
  priority: number
  speaker: string
}

export interface ChatRow {
  speaker: string
  text: string
  tick: number
}

export interface StateFrame {
  tick: number
  agent: {
    pose: [number, number, number]
    held: string[]
    pointing: [number, number] | null
    blocked: boolean
  }
  world_bounds: [number, number, number, number]
  reference_objects: ReferenceObject[]
  player: { pose: [number, number, number]; attention: [number, number] | null } | null
  dialogue_queue: DialogueRow[]
  task_queue: TaskRow[]
  last_parse: { utterance: string; lf: string } | null
  chats: ChatRow[]
}

export type ServerMessage =
  | { type: 'ack'; seq: number }
  | { type: 'error'; seq: number | null; reason: string }
  | { type: 'state'; tick: number; frame: StateFrame }

export type ClientMessage =
  | { type: 'chat'; seq?: number; text: string; speaker?: string }
  | { type: 'teleop'; seq?: number; action: 'forward' | 'back' | 'left' | 'right' }
  | { type: 'tag_object'; seq?: number; memid: string; tag: string }
  | { type: 'pause'; seq?: number }
  | { type: 'resume'; seq?: number }
  | { type: 'subscribe'; seq?: number; every?: number }

/**
 * Sorted-key, no-whitespace JSON: byte-identical to the server's canonical
 * serializer for the value shapes the protocol carries (strings, integers,
 * bools, null, arrays, objects).
 */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value === 'number' || typeof value === 'boolean') {
    return JSON.stringify(value)
  }
  if (typeof value === 'string') {
    return JSON.stringify(value)
  }
  if (Array.isArray(value)) {
    return '[' + value.map(canonicalJson).join(',') + ']'
  }
  if (typeof value === 'object') {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => JSON.stringify(k) + ':' + canonicalJson(v))
    return '{' + entries.join(',') + '}'
  }
  throw new Error(`cannot serialize ${typeof value}`)
}

export function encodeMessage(msg: Record<string, unknown>): Uint8Array {
  const payload = new TextEncoder().encode(canonicalJson(msg))
  if (payload.length > MAX_MESSAGE) throw new Error('message too large')
  const out = new Uint8Array(4 + payload.length)
  new DataView(out.buffer).setUint32(0, payload.length, false)
  out.set(payload, 4)
  return out
}

/** Incremental length-prefixed frame splitter over arbitrary byte chunks. */
export class FrameDecoder {
  private buffer = new Uint8Array(0)

  push(chunk: Uint8Array): ServerMessage[] {
    const joined = new Uint8Array(this.buffer.length + chunk.length)
    joined.set(this.buffer, 0)
    joined.set(chunk, this.buffer.length)
    this.buffer = joined

    const out: ServerMessage[] = []
    for (;;) {
      if (this.buffer.length < 4) break
      const view = new DataView(this.buffer.buffer, this.buffer.byteOffset)
      const length = view.getUint32(0, false)
      if (length > MAX_MESSAGE) throw new Error(`frame too large: ${length}`)
      if (this.buffer.length < 4 + length) break
      const payload = this.buffer.slice(4, 4 + length)
      this.buffer = this.buffer.slice(4 + length)
      out.push(JSON.parse(new TextDecoder().decode(payload)) as ServerMessage)
    }
    return out
  }
}
