/**
 * Recorded fixtures. STATE_FIXTURE is a real state message captured from a
 * running agent (three visible objects, a running move task, a pointing
 * human). The hex strings are byte-exact wire encodings produced by the
 * gateway's own serializer; encode tests compare against them byte for
 * byte.
 */

import type { ServerMessage } from '../src/protocol.js'

export const STATE_FIXTURE = {"frame":{"agent":{"blocked":false,"held":[],"pointing":null,"pose":[2.695596737993628,1.4329569286954156,0.25]},"chats":[{"speaker":"human","text":"go to the chair","tick":0}],"dialogue_queue":[],"last_parse":{"lf":"{\"action_sequence\":[{\"action_type\":\"MOVE\",\"location\":{\"reference_object\":{\"filters\":{\"has_tag\":\"chair\"}}}}],\"dialogue_type\":\"HUMAN_GIVE_COMMAND\"}","utterance":"go to the chair"},"player":{"attention":[5.1,2.2],"pose":[2.0,3.0,0.0]},"reference_objects":[{"class_label":"chair","last_seen_tick":0,"memid":"e48c090e847fa70b9d8c9022dc86e29a","position":[5.0,2.0],"radius":0.4,"tags":["chair","red"]},{"class_label":"cup","last_seen_tick":0,"memid":"d333a80782ed1c6d2220771ef348c449","position":[3.0,4.0],"radius":0.2,"tags":["cup"]},{"class_label":"ball","last_seen_tick":0,"memid":"4fc79b628b9657f58907d8afe4b4a14b","position":[7.0,6.0],"radius":0.3,"tags":["ball","blue"]}],"task_queue":[{"detail":"target=(5,2)","kind":"move","priority":0,"status":"running","task_id":0}],"tick":8,"world_bounds":[0.0,0.0,12.0,8.0]},"tick":8,"type":"state"} as ServerMessage & { type: 'state' }

// encode_message({"type": "chat", "seq": 1, "text": "go to the chair"})
export const CHAT_WIRE_HEX =
  '000000307b22736571223a312c2274657874223a22676f20746f20746865206368616972222c2274797065223a2263686174227d'
// encode_message({"type": "teleop", "seq": 2, "action": "forward"})
export const TELEOP_WIRE_HEX =
  '0000002c7b22616374696f6e223a22666f7277617264222c22736571223a322c2274797065223a2274656c656f70227d'
// encode_message({"type": "tag_object", "seq": 3, "memid": "9ffd...", "tag": "chair"})
export const TAG_WIRE_HEX =
  '000000567b226d656d6964223a223966666430343164396562366361343837633163373337663765626465393832222c22736571223a332c22746167223a226368616972222c2274797065223a227461675f6f626a656374227d'
// encode_message({"type": "subscribe", "seq": 0})
export const SUBSCRIBE_WIRE_HEX =
  '0000001c7b22736571223a302c2274797065223a22737562736372696265227d'
// encode_message({"type": "pause", "seq": 4})
export const PAUSE_WIRE_HEX = '000000187b22736571223a342c2274797065223a227061757365227d'
// encode_message({"type": "resume", "seq": 5})
export const RESUME_WIRE_HEX = '000000197b22736571223a352c2274797065223a22726573756d65227d'

export function hexOf(data: Uint8Array): string {
  return Array.from(data, b => b.toString(16).padStart(2, '0')).join('')
}

export function fromHex(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2)
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16)
  }
  return out
}
