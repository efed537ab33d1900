import { describe, expect, test } from 'vitest'

import { FrameDecoder, canonicalJson, encodeMessage } from '../src/protocol.js'
import {
  CHAT_WIRE_HEX, PAUSE_WIRE_HEX, RESUME_WIRE_HEX, STATE_FIXTURE,
  SUBSCRIBE_WIRE_HEX, TAG_WIRE_HEX, TELEOP_WIRE_HEX, hexOf,
} from './fixtures.js'

describe('canonical encoding', () => {
  test('sorts keys and strips whitespace', () => {
    expect(canonicalJson({ b: 1, a: { d: [1, 2], c: 'x' } }))
      .toBe('{"a":{"c":"x","d":[1,2]},"b":1}')
  })

  test('chat message bytes match the gateway serializer exactly', () => {
    const wire = encodeMessage({ type: 'chat', seq: 1, text: 'go to the chair' })
    expect(hexOf(wire)).toBe(CHAT_WIRE_HEX)
  })

  test.each([
    [{ type: 'teleop', seq: 2, action: 'forward' }, TELEOP_WIRE_HEX],
    [{ type: 'tag_object', seq: 3, memid: '9ffd041d9eb6ca487c1c737f7ebde982',
       tag: 'chair' }, TAG_WIRE_HEX],
    [{ type: 'subscribe', seq: 0 }, SUBSCRIBE_WIRE_HEX],
    [{ type: 'pause', seq: 4 }, PAUSE_WIRE_HEX],
    [{ type: 'resume', seq: 5 }, RESUME_WIRE_HEX],
  ])('catalog fixture %#', (msg, hex) => {
    expect(hexOf(encodeMessage(msg as Record<string, unknown>))).toBe(hex)
  })
})

describe('frame decoding', () => {
  test('round trips one message', () => {
    const decoder = new FrameDecoder()
    const msgs = decoder.push(encodeMessage({ type: 'ack', seq: 7 }))
    expect(msgs).toEqual([{ type: 'ack', seq: 7 }])
  })

  test('reassembles messages split across arbitrary chunk boundaries', () => {
    const wire = new Uint8Array([
      ...encodeMessage({ type: 'ack', seq: 1 }),
      ...encodeMessage({ type: 'error', seq: null, reason: 'nope' }),
      ...encodeMessage({ type: 'ack', seq: 2 }),
    ])
    for (const chunkSize of [1, 2, 3, 5, 7, 64, wire.length]) {
      const decoder = new FrameDecoder()
      const got: unknown[] = []
      for (let i = 0; i < wire.length; i += chunkSize) {
        got.push(...decoder.push(wire.slice(i, i + chunkSize)))
      }
      expect(got).toEqual([
        { type: 'ack', seq: 1 },
        { type: 'error', seq: null, reason: 'nope' },
        { type: 'ack', seq: 2 },
      ])
    }
  })

  test('decodes the recorded state fixture', () => {
    const decoder = new FrameDecoder()
    const [msg] = decoder.push(
      encodeMessage(STATE_FIXTURE as unknown as Record<string, unknown>))
    expect(msg).toEqual(STATE_FIXTURE)
  })

  test('rejects oversized frames', () => {
    const decoder = new FrameDecoder()
    const bad = new Uint8Array(4)
    new DataView(bad.buffer).setUint32(0, (1 << 20) + 1, false)
    expect(() => decoder.push(bad)).toThrow(/too large/)
  })

  test('non-ascii text survives encode (matches unescaped UTF-8)', () => {
    const wire = encodeMessage({ type: 'chat', seq: 9, text: 'héllo 💡' })
    const decoder = new FrameDecoder()
    expect(decoder.push(wire)).toEqual([{ type: 'chat', seq: 9, text: 'héllo 💡' }])
  })
})
