/**
 * ViewModel: everything the panes render, driven only by decoded server
 * messages and local UI events. The transcript, queues, and map all come
 * from the latest state frame; nothing is extrapolated client-side.
 */

import type { ClientMessage, ServerMessage, StateFrame } from './protocol.js'

export type ConnectionStatus = 'connecting' | 'connected' | 'disconnected'

export type UiEvent =
  | { kind: 'chat_submit'; text: string }
  | { kind: 'teleop'; action: 'forward' | 'back' | 'left' | 'right' }
  | { kind: 'stop' }
  | { kind: 'resume' }
  | { kind: 'subscribe'; every?: number }
  | { kind: 'tag_submit'; memid: string; tag: string }
  | { kind: 'select_object'; memid: string | null }

export const OFFLINE_QUEUE_LIMIT = 50

export class ViewModel {
  frame: StateFrame | null = null
  connection: ConnectionStatus = 'connecting'
  /** seq -> message type, awaiting ack/error */
  pending = new Map<number, string>()
  selected: string | null = null
  lastError: string | null = null
  /** messages composed while disconnected, flushed on reconnect */
  offlineQueue: ClientMessage[] = []
  private nextSeq = 0

  /** Apply one decoded server message. */
  receive(msg: ServerMessage): void {
    if (msg.type === 'state') {
      this.frame = msg.frame
      if (this.selected !== null
          && !msg.frame.reference_objects.some(r => r.memid === this.selected)) {
        this.selected = null
      }
    } else if (msg.type === 'ack') {
      this.pending.delete(msg.seq)
    } else if (msg.type === 'error') {
      if (msg.seq !== null) this.pending.delete(msg.seq)
      this.lastError = msg.reason
    }
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status
  }

  /**
   * Turn a UI event into exactly one wire message with a fresh seq, or null
   * for purely local events (selection). While disconnected, up to
   * OFFLINE_QUEUE_LIMIT messages are held for the reconnect flush.
   */
  sendCommand(event: UiEvent): ClientMessage | null {
    if (event.kind === 'select_object') {
      this.selected = event.memid
      return null
    }
    const msg = this.composeMessage(event)
    msg.seq = this.nextSeq++
    this.pending.set(msg.seq, msg.type)
    if (this.connection !== 'connected') {
      if (this.offlineQueue.length < OFFLINE_QUEUE_LIMIT) this.offlineQueue.push(msg)
      return null
    }
    return msg
  }

  private composeMessage(event: Exclude<UiEvent, { kind: 'select_object' }>): ClientMessage {
    switch (event.kind) {
      case 'chat_submit':
        return { type: 'chat', text: event.text }
      case 'teleop':
        return { type: 'teleop', action: event.action }
      case 'stop':
        return { type: 'pause' }
      case 'resume':
        return { type: 'resume' }
      case 'subscribe':
        return event.every === undefined
          ? { type: 'subscribe' }
          : { type: 'subscribe', every: event.every }
      case 'tag_submit':
        return { type: 'tag_object', memid: event.memid, tag: event.tag }
    }
  }

  /** Drain the offline queue (oldest first) after reconnecting. */
  flushOffline(): ClientMessage[] {
    const queued = this.offlineQueue
    this.offlineQueue = []
    return queued
  }
}
