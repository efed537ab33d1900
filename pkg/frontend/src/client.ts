/**
 * Client wiring: one transport, one ViewModel, one render root. Socket
 * events funnel through a single ordered handler into the ViewModel; every
 * change re-renders. Reconnects with exponential backoff and flushes
 * messages queued while offline.
 */

import { FrameDecoder, encodeMessage } from './protocol.js'
import type { ClientMessage } from './protocol.js'
import { ViewModel } from './viewmodel.js'
import type { UiEvent } from './viewmodel.js'
import { renderPanes } from './render.js'

export interface Transport {
  send(data: Uint8Array): void
  close(): void
}

export interface TransportEvents {
  onData(chunk: Uint8Array): void
  onOpen(): void
  onClose(): void
}

export type TransportFactory = (events: TransportEvents) => Transport

const BACKOFF_START_MS = 500
const BACKOFF_CAP_MS = 8000

export class DashboardClient {
  readonly vm = new ViewModel()
  private decoder = new FrameDecoder()
  private transport: Transport | null = null
  private backoff = BACKOFF_START_MS
  private closed = false

  constructor(
    private makeTransport: TransportFactory,
    private root: HTMLElement,
    private schedule: (fn: () => void, ms: number) => void =
      (fn, ms) => { setTimeout(fn, ms) },
  ) {}

  start(): void {
    this.connect()
    this.render()
  }

  stop(): void {
    this.closed = true
    this.transport?.close()
  }

  dispatch = (event: UiEvent): void => {
    const msg = this.vm.sendCommand(event)
    if (msg) this.sendWire(msg)
    this.render()
  }

  private sendWire(msg: ClientMessage): void {
    this.transport?.send(encodeMessage(msg as Record<string, unknown>))
  }

  private connect(): void {
    this.vm.setConnection('connecting')
    this.decoder = new FrameDecoder()
    this.transport = this.makeTransport({
      onOpen: () => {
        this.vm.setConnection('connected')
        this.backoff = BACKOFF_START_MS
        this.dispatch({ kind: 'subscribe' })
        for (const queued of this.vm.flushOffline()) this.sendWire(queued)
        this.render()
      },
      onData: chunk => {
        for (const msg of this.decoder.push(chunk)) this.vm.receive(msg)
        this.render()
      },
      onClose: () => {
        if (this.closed) return
        this.vm.setConnection('disconnected')
        this.render()
        const wait = this.backoff
        this.backoff = Math.min(this.backoff * 2, BACKOFF_CAP_MS)
        this.schedule(() => {
          if (!this.closed) this.connect()
        }, wait)
      },
    })
  }

  render(): void {
    renderPanes(this.vm, this.root, this.dispatch)
  }
}
