/**
 * Browser entry point. The gateway speaks raw TCP, which browsers cannot
 * open, so the page connects to the WebSocket bridge (bridge.js) which
 * pipes bytes to the gateway unchanged. Endpoint is configurable via query
 * parameters: ?host=...&port=... select the bridge endpoint.
 */

import { DashboardClient } from './client.js'
import type { TransportEvents } from './client.js'

function webSocketTransport(url: string) {
  return (events: TransportEvents) => {
    const ws = new WebSocket(url)
    ws.binaryType = 'arraybuffer'
    ws.onopen = () => events.onOpen()
    ws.onmessage = e => events.onData(new Uint8Array(e.data as ArrayBuffer))
    ws.onclose = () => events.onClose()
    return {
      send: (data: Uint8Array) => ws.send(data),
      close: () => ws.close(),
    }
  }
}

const params = new URLSearchParams(location.search)
const host = params.get('host') ?? location.hostname
const port = params.get('port') ?? location.port
const url = `ws://${host}:${port}/gateway`

const root = document.getElementById('app')
if (!root) throw new Error('missing #app element')
new DashboardClient(webSocketTransport(url), root).start()
