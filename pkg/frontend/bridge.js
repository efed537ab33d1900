#!/usr/bin/env node
/**
 * Dashboard host: serves the static app and bridges WebSocket <-> TCP.
 *
 * Browsers cannot open raw TCP sockets, so /gateway upgrades to a WebSocket
 * and pipes bytes unchanged to the agent gateway (PROTOCOL.md framing
 * included). Optionally spawns the agent itself.
 *
 *   node bridge.js [--listen 8080] [--gateway-host 127.0.0.1]
 *                  [--gateway-port 8765] [--scenario ../scenarios/chair.scn]
 *
 * With --scenario, an `agent run --serve` subprocess is started and the
 * bridge targets it; otherwise point --gateway-port at a running agent.
 */

import http from 'node:http'
import net from 'node:net'
import fs from 'node:fs'
import path from 'node:path'
import { spawn } from 'node:child_process'
import { fileURLToPath } from 'node:url'
import { WebSocketServer } from 'ws'

const __dirname = path.dirname(fileURLToPath(import.meta.url))

function arg(name, fallback) {
  const index = process.argv.indexOf(`--${name}`)
  return index >= 0 ? process.argv[index + 1] : fallback
}

const listenPort = Number(arg('listen', '8080'))
const gatewayHost = arg('gateway-host', '127.0.0.1')
let gatewayPort = Number(arg('gateway-port', '8765'))
const scenario = arg('scenario', null)

const MIME = {
  '.html': 'text/html', '.js': 'text/javascript', '.css': 'text/css',
  '.map': 'application/json',
}

const server = http.createServer((req, res) => {
  const url = (req.url || '/').split('?')[0]
  const file = url === '/' ? '/index.html' : url
  const full = path.join(__dirname, path.normalize(file))
  if (!full.startsWith(__dirname) || !fs.existsSync(full) ||
      !fs.statSync(full).isFile()) {
    res.writeHead(404)
    res.end('not found')
    return
  }
  res.writeHead(200, { 'content-type': MIME[path.extname(full)] || 'text/plain' })
  fs.createReadStream(full).pipe(res)
})

const wss = new WebSocketServer({ server, path: '/gateway' })
wss.on('connection', ws => {
  const tcp = net.createConnection({ host: gatewayHost, port: gatewayPort })
  tcp.on('data', chunk => ws.readyState === ws.OPEN && ws.send(chunk))
  tcp.on('close', () => ws.close())
  tcp.on('error', () => ws.close())
  ws.on('message', data => tcp.write(data))
  ws.on('close', () => tcp.destroy())
})

function start() {
  server.listen(listenPort, () => {
    console.log(`dashboard: http://127.0.0.1:${listenPort}/  `
      + `(bridging to gateway ${gatewayHost}:${gatewayPort})`)
  })
}

if (scenario) {
  const agent = spawn('python3', ['-m', 'deskbot.cli', 'run',
    '--scenario', scenario, '--serve', '0', '--realtime', '20'],
    { stdio: ['ignore', 'pipe', 'inherit'] })
  agent.stdout.on('data', chunk => {
    const text = chunk.toString()
    process.stdout.write(text)
    const match = text.match(/port (\d+)/)
    if (match) {
      gatewayPort = Number(match[1])
      start()
    }
  })
  const stop = () => { agent.kill(); process.exit(0) }
  process.on('SIGINT', stop)
  process.on('SIGTERM', stop)
} else {
  start()
}
