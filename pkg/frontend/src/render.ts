/**
 * Pane rendering: a pure function of the ViewModel. Every call rebuilds the
 * pane contents from the latest state frame, so identical frames render
 * identical DOM (snapshot-testable against recorded fixtures).
 */

import type { StateFrame } from './protocol.js'
import type { UiEvent, ViewModel } from './viewmodel.js'

const SVG_NS = 'http://www.w3.org/2000/svg'

export type Dispatch = (event: UiEvent) => void

export function renderPanes(vm: ViewModel, root: HTMLElement, dispatch: Dispatch): void {
  root.textContent = ''
  root.appendChild(renderBanner(vm))
  const grid = el('div', 'panes')
  grid.appendChild(renderChatPane(vm, dispatch))
  grid.appendChild(renderMapPane(vm, dispatch))
  grid.appendChild(renderTaskPane(vm.frame))
  grid.appendChild(renderDialoguePane(vm.frame))
  grid.appendChild(renderParsePane(vm.frame))
  grid.appendChild(renderTeleopPane(dispatch))
  grid.appendChild(renderInspectorPane(vm, dispatch))
  root.appendChild(grid)
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

function pane(title: string, className: string): HTMLElement {
  const box = el('section', `pane ${className}`)
  box.appendChild(el('h2', 'pane-title', title))
  return box
}

function renderBanner(vm: ViewModel): HTMLElement {
  const banner = el('div', `banner banner-${vm.connection}`)
  if (vm.connection === 'connected') {
    banner.textContent = vm.frame ? `connected · tick ${vm.frame.tick}` : 'connected'
  } else if (vm.connection === 'connecting') {
    banner.textContent = 'connecting…'
  } else {
    banner.textContent = 'disconnected · reconnecting…'
  }
  if (vm.lastError) {
    banner.appendChild(el('span', 'banner-error', ` last error: ${vm.lastError}`))
  }
  return banner
}

// 1. chat transcript + input
function renderChatPane(vm: ViewModel, dispatch: Dispatch): HTMLElement {
  const box = pane('chat', 'chat-pane')
  const log = el('ul', 'chat-log')
  for (const chat of vm.frame?.chats ?? []) {
    const row = el('li', `chat-row chat-${chat.speaker}`)
    row.appendChild(el('span', 'chat-speaker', chat.speaker))
    row.appendChild(el('span', 'chat-text', chat.text))
    log.appendChild(row)
  }
  box.appendChild(log)

  const form = el('form', 'chat-form') as HTMLFormElement
  const input = el('input', 'chat-input') as HTMLInputElement
  input.placeholder = 'say something, e.g. "go to the chair"'
  const send = el('button', 'chat-send', 'send') as HTMLButtonElement
  send.type = 'submit'
  form.appendChild(input)
  form.appendChild(send)
  form.addEventListener('submit', e => {
    e.preventDefault()
    if (input.value.trim()) {
      dispatch({ kind: 'chat_submit', text: input.value })
      input.value = ''
    }
  })
  box.appendChild(form)
  return box
}

// 2. 2D memory map (world coordinates, y-up, fit to world bounds)
function renderMapPane(vm: ViewModel, dispatch: Dispatch): HTMLElement {
  const box = pane('memory map', 'map-pane')
  const frame = vm.frame
  if (!frame) {
    box.appendChild(el('p', 'map-empty', 'no state yet'))
    return box
  }
  const [x0, y0, x1, y1] = frame.world_bounds
  // y-up: mirror world y inside the bounds so SVG's downward axis shows up-is-up
  const Y = (y: number) => y0 + y1 - y

  const svg = document.createElementNS(SVG_NS, 'svg')
  svg.setAttribute('class', 'map')
  const pad = 0.5
  svg.setAttribute('viewBox',
    `${x0 - pad} ${y0 - pad} ${x1 - x0 + 2 * pad} ${y1 - y0 + 2 * pad}`)

  const border = document.createElementNS(SVG_NS, 'rect')
  border.setAttribute('class', 'map-border')
  border.setAttribute('x', String(x0))
  border.setAttribute('y', String(y0))
  border.setAttribute('width', String(x1 - x0))
  border.setAttribute('height', String(y1 - y0))
  svg.appendChild(border)

  for (const ref of frame.reference_objects) {
    const group = document.createElementNS(SVG_NS, 'g')
    group.setAttribute('class',
      'map-object' + (vm.selected === ref.memid ? ' selected' : ''))
    group.setAttribute('data-memid', ref.memid)
    const disc = document.createElementNS(SVG_NS, 'circle')
    disc.setAttribute('cx', String(ref.position[0]))
    disc.setAttribute('cy', String(Y(ref.position[1])))
    disc.setAttribute('r', String(ref.radius))
    const label = document.createElementNS(SVG_NS, 'text')
    label.setAttribute('x', String(ref.position[0]))
    label.setAttribute('y', String(Y(ref.position[1] + ref.radius + 0.15)))
    label.setAttribute('class', 'map-label')
    label.textContent = ref.class_label
    group.appendChild(disc)
    group.appendChild(label)
    group.addEventListener('click', () =>
      dispatch({ kind: 'select_object', memid: ref.memid }))
    svg.appendChild(group)
  }

  // agent: position dot plus heading arrow
  const [ax, ay, yaw] = frame.agent.pose
  const agent = document.createElementNS(SVG_NS, 'g')
  agent.setAttribute('class', 'map-agent')
  const dot = document.createElementNS(SVG_NS, 'circle')
  dot.setAttribute('cx', String(ax))
  dot.setAttribute('cy', String(Y(ay)))
  dot.setAttribute('r', '0.18')
  const heading = document.createElementNS(SVG_NS, 'line')
  heading.setAttribute('class', 'map-heading')
  heading.setAttribute('x1', String(ax))
  heading.setAttribute('y1', String(Y(ay)))
  heading.setAttribute('x2', String(ax + 0.6 * Math.cos(yaw)))
  heading.setAttribute('y2', String(Y(ay + 0.6 * Math.sin(yaw))))
  agent.appendChild(dot)
  agent.appendChild(heading)
  svg.appendChild(agent)

  if (frame.agent.pointing) {
    svg.appendChild(ray('map-agent-pointing', [ax, ay], frame.agent.pointing, Y))
  }
  if (frame.player) {
    const [hx, hy] = frame.player.pose
    const human = document.createElementNS(SVG_NS, 'circle')
    human.setAttribute('class', 'map-human')
    human.setAttribute('cx', String(hx))
    human.setAttribute('cy', String(Y(hy)))
    human.setAttribute('r', '0.18')
    svg.appendChild(human)
    if (frame.player.attention) {
      svg.appendChild(ray('map-pointing', [hx, hy], frame.player.attention, Y))
    }
  }
  box.appendChild(svg)
  return box
}

function ray(className: string, from: [number, number], to: [number, number],
             Y: (y: number) => number): SVGLineElement {
  const line = document.createElementNS(SVG_NS, 'line') as SVGLineElement
  line.setAttribute('class', className)
  line.setAttribute('x1', String(from[0]))
  line.setAttribute('y1', String(Y(from[1])))
  line.setAttribute('x2', String(to[0]))
  line.setAttribute('y2', String(Y(to[1])))
  return line
}

// 3. task queue
function renderTaskPane(frame: StateFrame | null): HTMLElement {
  const box = pane('task queue', 'task-pane')
  const list = el('ul', 'task-list')
  for (const task of frame?.task_queue ?? []) {
    const row = el('li', `task-row task-${task.status}`)
    row.appendChild(el('span', 'task-kind', `${task.kind}#${task.task_id}`))
    row.appendChild(el('span', 'task-status', task.status))
    row.appendChild(el('span', 'task-detail',
      `p${task.priority} ${task.detail}`))
    list.appendChild(row)
  }
  if (!list.childElementCount) list.appendChild(el('li', 'task-empty', 'idle'))
  box.appendChild(list)
  return box
}

// 4. dialogue queue
function renderDialoguePane(frame: StateFrame | null): HTMLElement {
  const box = pane('dialogue queue', 'dialogue-pane')
  const list = el('ul', 'dialogue-list')
  for (const obj of frame?.dialogue_queue ?? []) {
    list.appendChild(el('li', 'dialogue-row',
      `${obj.kind} (p${obj.priority}, ${obj.speaker})`))
  }
  if (!list.childElementCount) list.appendChild(el('li', 'dialogue-empty', 'empty'))
  box.appendChild(list)
  return box
}

// 5. last utterance + canonical logical form
function renderParsePane(frame: StateFrame | null): HTMLElement {
  const box = pane('last parse', 'parse-pane')
  if (frame?.last_parse) {
    box.appendChild(el('p', 'parse-utterance', frame.last_parse.utterance))
    box.appendChild(el('pre', 'parse-lf', frame.last_parse.lf))
  } else {
    box.appendChild(el('p', 'parse-empty', 'nothing parsed yet'))
  }
  return box
}

// 6. teleop buttons
function renderTeleopPane(dispatch: Dispatch): HTMLElement {
  const box = pane('teleop', 'teleop-pane')
  const actions: [string, UiEvent][] = [
    ['forward', { kind: 'teleop', action: 'forward' }],
    ['back', { kind: 'teleop', action: 'back' }],
    ['left', { kind: 'teleop', action: 'left' }],
    ['right', { kind: 'teleop', action: 'right' }],
    ['stop', { kind: 'stop' }],
    ['resume', { kind: 'resume' }],
  ]
  for (const [label, event] of actions) {
    const button = el('button', `teleop-btn teleop-${label}`, label)
    button.addEventListener('click', () => dispatch(event))
    box.appendChild(button)
  }
  return box
}

// 7. object inspector with tag entry
function renderInspectorPane(vm: ViewModel, dispatch: Dispatch): HTMLElement {
  const box = pane('object inspector', 'inspector-pane')
  const ref = vm.frame?.reference_objects.find(r => r.memid === vm.selected)
  if (!ref) {
    box.appendChild(el('p', 'inspector-empty', 'click an object on the map'))
    return box
  }
  const dl = el('dl', 'inspector-fields')
  const fields: [string, string][] = [
    ['memid', ref.memid],
    ['class', ref.class_label],
    ['position', `(${ref.position[0].toFixed(2)}, ${ref.position[1].toFixed(2)})`],
    ['last seen', `tick ${ref.last_seen_tick}`],
    ['tags', ref.tags.join(', ') || '—'],
  ]
  for (const [name, value] of fields) {
    dl.appendChild(el('dt', undefined, name))
    dl.appendChild(el('dd', undefined, value))
  }
  box.appendChild(dl)

  const form = el('form', 'tag-form') as HTMLFormElement
  const input = el('input', 'tag-input') as HTMLInputElement
  input.placeholder = 'add tag'
  const submit = el('button', 'tag-submit', 'tag') as HTMLButtonElement
  submit.type = 'submit'
  form.appendChild(input)
  form.appendChild(submit)
  form.addEventListener('submit', e => {
    e.preventDefault()
    if (input.value.trim()) {
      dispatch({ kind: 'tag_submit', memid: ref.memid, tag: input.value.trim() })
      input.value = ''
    }
  })
  box.appendChild(form)
  return box
}
