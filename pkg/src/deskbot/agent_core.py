"""The agent event loop and all subsystem wiring.

Every tick runs exactly four phases in a fixed order: fast perception,
memory update (where the detailed perception pass lands when scheduled),
controller step (drain the inbox, then step one dialogue object), and task
step (step one task, then advance world physics by exactly one tick). Each
phase is fault-isolated: an exception is logged to memory as an error chat
and the loop keeps going.

The loop owns world, memory, and both queues. The only cross-thread surfaces
are the inbox queue (chats, teleop, annotations) and published state frames,
both carrying plain copies.
"""

from __future__ import annotations

import dataclasses
import json
import math
import queue
import random
from dataclasses import dataclass, field

from . import dsl, interpreter, perception, tasks, world
from .memory import MemoryStore
from .nlparser import Parser

PHASES = ("fast_perception", "memory_update", "controller_step", "task_step")


@dataclass
class AgentConfig:
    slow_period: int = 10
    clarification_window: int = 200
    dedup_epsilon: float = 0.75
    dedup_tau: float = 0.9
    attention_horizon: int = 300
    position_jitter_sigma: float = 0.0
    max_step: float = 0.25
    max_turn: float = 0.25
    fov_half_angle: float = math.pi / 3.0
    view_range: float = 6.0
    grasp_range: float = 0.6
    move_tolerance: float = 0.5
    heading_tolerance: float = 0.05
    turn_tolerance: float = 0.02
    blocked_fail_streak: int = 10
    point_hold_ticks: int = 20
    idle_question: bool = False
    idle_question_period: int = 50
    teleop_step: float = 0.5
    teleop_turn: float = math.pi / 8.0
    teleop_priority: int = 10
    snapshot_chats: int = 20
    frame_every: int = 1
    gateway_port: int = 0
    scenario_path: str = ""

    def __post_init__(self):
        for name in ("slow_period", "clarification_window", "attention_horizon",
                     "blocked_fail_streak", "point_hold_ticks", "idle_question_period",
                     "frame_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("max_step", "max_turn", "view_range", "grasp_range",
                     "move_tolerance", "dedup_epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not -1.0 <= self.dedup_tau <= 1.0:
            raise ValueError("dedup_tau must be in [-1, 1]")
        if self.position_jitter_sigma < 0:
            raise ValueError("position_jitter_sigma must be >= 0")

    def world_config(self) -> world.WorldConfig:
        return world.WorldConfig(max_step=self.max_step, max_turn=self.max_turn,
                                 fov_half_angle=self.fov_half_angle,
                                 view_range=self.view_range,
                                 grasp_range=self.grasp_range)

    @classmethod
    def from_text(cls, text: str) -> "AgentConfig":
        """Parse `key = value` config text (one per line, # comments)."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ValueError(f"config line {lineno}: unknown setting {key!r}")
            kind = types[key]
            if kind == "bool":
                if value not in ("true", "false"):
                    raise ValueError(f"config line {lineno}: {key} must be true/false")
                kwargs[key] = value == "true"
            elif kind == "int":
                kwargs[key] = int(value)
            elif kind == "float":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


# Inbox messages (the single inbound cross-thread channel)
@dataclass(frozen=True)
class ChatMsg:
    speaker: str
    text: str


@dataclass(frozen=True)
class AnnotationMsg:
    memid: str
    tag: str


@dataclass(frozen=True)
class TeleopMsg:
    action: str  # forward | back | left | right


@dataclass(frozen=True)
class PauseMsg:
    pass


@dataclass(frozen=True)
class ResumeMsg:
    pass


class _TickContext:
    """Per-tick execution surface handed to dialogue objects and tasks."""

    def __init__(self, agent: "Agent"):
        self._agent = agent
        self.memory = agent.memory
        self.config = agent.config
        self.tick = agent.world.tick

    # shared
    def pose(self) -> world.Pose:
        return self._agent.world.agent_pose

    agent_pose = pose

    def say(self, text: str):
        self._agent._say(text)

    # dialogue surface
    def enqueue(self, obj):
        self._agent.dialogue_queue.enqueue(obj, self.tick)

    def dispatch(self, lf, speaker: str):
        interpreter.dispatch(lf, speaker, self._agent.dialogue_queue, self.tick)

    def push_task(self, task) -> int:
        return self._agent.task_queue.push(task, self.memory, self.tick)

    def pause_tasks(self):
        self._agent.task_queue.pause_running(self.memory, self.tick)

    def resume_tasks(self):
        self._agent.task_queue.resume(self.memory, self.tick)

    def task_listing(self) -> list[dict]:
        return self._agent.task_queue.listing()

    # task surface
    def observe(self) -> world.WorldView:
        return world.observe(self._agent.world, self.config.world_config())

    def command(self, cmd) -> tasks.CommandResult:
        return self._agent._apply_command(cmd)

    def set_pointing(self, target: tuple[float, float], hold_ticks: int):
        self._agent.agent_pointing = (float(target[0]), float(target[1]),
                                      self.tick + hold_ticks)


class Agent:
    def __init__(self, world_state: world.WorldState, config: AgentConfig | None = None,
                 parser: Parser | None = None):
        self.config = config or AgentConfig()
        self.world = world_state
        self.memory = MemoryStore(seed=world_state.seed)
        self.parser = parser or Parser()
        self.dialogue_queue = interpreter.DialogueQueue()
        self.task_queue = tasks.TaskQueue()
        self.inbox: queue.Queue = queue.Queue()
        self.rng = random.Random(world_state.seed)
        self.trace: list[dict] = []
        self.last_parse: tuple[str, str] | None = None
        self.agent_pointing: tuple[float, float, int] | None = None
        self.frame_listeners: list = []
        # overridable perception entry points (fault injection, model swaps)
        self.perceive_fast = perception.perceive_fast
        self.perceive_slow = perception.perceive_slow
        self._command_issued = False
        self._chats_this_tick: list[str] = []

    # -- inbound -----------------------------------------------------------

    def inject_chat(self, speaker: str, text: str):
        self.inbox.put(ChatMsg(speaker=speaker, text=text))

    # -- loop --------------------------------------------------------------

    def tick(self) -> list[dict]:
        """Run one full event-loop iteration; returns this tick's trace entries."""
        t = self.world.tick
        for event in self.world.chats_due(t):
            self.inbox.put(ChatMsg(speaker="human", text=event.text))

        entries: list[dict] = []
        self._command_issued = False
        self._chats_this_tick = []
        slow_due = (t % self.config.slow_period == 0) or not self.inbox.empty()

        # 1. fast perception
        entry = {"tick": t, "phase": "fast_perception", "slow_scheduled": slow_due}
        view = None
        try:
            view = world.observe(self.world, self.config.world_config())
            self.perceive_fast(view, self.memory, t, self.config.attention_horizon)
            entry["objects_visible"] = len(view.objects)
            entry["human_visible"] = view.human is not None
        except Exception as e:
            self._log_error("fast_perception", e, entry)
        entries.append(entry)

        # 2. memory update (detailed perception results land here)
        entry = {"tick": t, "phase": "memory_update", "merged": 0}
        try:
            if slow_due and view is not None:
                decisions = self.perceive_slow(
                    view, self.memory, t,
                    epsilon=self.config.dedup_epsilon, tau=self.config.dedup_tau,
                    jitter_sigma=self.config.position_jitter_sigma, rng=self.rng)
                entry["merged"] = len(decisions)
            entry["nodes"] = len(self.memory)
        except Exception as e:
            self._log_error("memory_update", e, entry)
        entries.append(entry)

        # 3. controller: drain inbox, then step one dialogue object
        ctx = _TickContext(self)
        entry = {"tick": t, "phase": "controller_step", "drained": 0,
                 "parsed": [], "dialogue": None}
        try:
            entry["drained"] = self._drain_inbox(ctx, entry)
            stepped = self.dialogue_queue.step_one(ctx)
            if stepped is not None:
                obj, effects = stepped
                entry["dialogue"] = obj.kind
                if effects.tasks_pushed:
                    entry["tasks_pushed"] = effects.tasks_pushed
                if effects.resolved_memids:
                    entry["resolved"] = effects.resolved_memids
                if effects.note:
                    entry["note"] = effects.note
            elif (self.config.idle_question and len(self.task_queue) == 0
                    and t % self.config.idle_question_period == 0):
                self._ask_idle_question(ctx)
        except Exception as e:
            self._log_error("controller_step", e, entry)
        if self._chats_this_tick:
            entry["chats"] = list(self._chats_this_tick)
        entries.append(entry)

        # 4. task step + one world physics tick
        entry = {"tick": t, "phase": "task_step", "task": None}
        try:
            report = self.task_queue.step_highest(ctx)
            if report is not None:
                entry.update({"task": report.task_id, "kind": report.kind,
                              "status": report.status, "command": report.command,
                              "blocked": report.blocked})
                if report.note:
                    entry["note"] = report.note
        except Exception as e:
            self._log_error("task_step", e, entry)
        if not self._command_issued:
            self._apply_command(world.Noop())
        if (self.agent_pointing is not None
                and self.world.tick >= self.agent_pointing[2]):
            self.agent_pointing = None
        entries.append(entry)

        self.trace.extend(entries)
        if self.frame_listeners and self.world.tick % self.config.frame_every == 0:
            frame = self.snapshot()
            for listener in self.frame_listeners:
                listener(frame)
        return entries

    def run(self, ticks: int, trace_file=None):
        for _ in range(ticks):
            start = len(self.trace)
            self.tick()
            if trace_file is not None:
                for entry in self.trace[start:]:
                    trace_file.write(trace_line(entry) + "\n")

    # -- internals -----------------------------------------------------------

    def _apply_command(self, cmd) -> tasks.CommandResult:
        if self._command_issued:
            raise RuntimeError("one physics command per tick")
        # mark only after physics accepts: a rejected command must leave the
        # tick's closing Noop to advance the world clock
        new_world = world.step_physics(self.world, cmd, self.config.world_config())
        self._command_issued = True
        self.world = new_world
        return tasks.CommandResult(
            pose=self.world.agent_pose, blocked=self.world.blocked,
            held_oids=tuple(o.oid for o in self.world.held))

    def _drain_inbox(self, ctx: _TickContext, entry: dict) -> int:
        drained = 0
        while True:
            try:
                msg = self.inbox.get_nowait()
            except queue.Empty:
                return drained
            drained += 1
            try:
                self._handle_message(msg, ctx, entry)
            except Exception as e:
                self._log_error("controller_step", e, entry)

    def _handle_message(self, msg, ctx: _TickContext, entry: dict):
        if isinstance(msg, ChatMsg):
            self.memory.create_node("Chat", {"speaker": msg.speaker, "text": msg.text},
                                    ctx.tick)
            result = self.parser.parse(msg.text)
            canonical = dsl.to_canonical(result.lf)
            self.last_parse = (msg.text, canonical)
            entry["parsed"].append(canonical)
            interpreter.dispatch(result.lf, msg.speaker, self.dialogue_queue, ctx.tick)
        elif isinstance(msg, AnnotationMsg):
            node = self.memory.peek(msg.memid)  # NotFound propagates to phase guard
            if not self.memory.find_triples(subject=node.memid, predicate="has_tag",
                                            obj_literal=msg.tag):
                self.memory.add_triple(node.memid, "has_tag", ctx.tick,
                                       obj_literal=msg.tag)
        elif isinstance(msg, TeleopMsg):
            pose = self.world.agent_pose
            if msg.action in ("forward", "back"):
                sign = 1.0 if msg.action == "forward" else -1.0
                target = (pose.x + sign * self.config.teleop_step * math.cos(pose.yaw),
                          pose.y + sign * self.config.teleop_step * math.sin(pose.yaw))
                task = tasks.Move(target, tolerance=self.config.max_step / 5.0,
                                  priority=self.config.teleop_priority)
            else:
                sign = 1.0 if msg.action == "left" else -1.0
                task = tasks.TurnTask(relative=sign * self.config.teleop_turn,
                                      priority=self.config.teleop_priority)
            self.task_queue.push(task, self.memory, ctx.tick)
        elif isinstance(msg, PauseMsg):
            self.task_queue.pause_running(self.memory, ctx.tick)
        elif isinstance(msg, ResumeMsg):
            self.task_queue.resume(self.memory, ctx.tick)
        else:
            raise ValueError(f"unknown inbox message {msg!r}")

    def _say(self, text: str):
        self.memory.create_node("Chat", {"speaker": "agent", "text": text},
                                self.world.tick)
        self._chats_this_tick.append(text)

    def _log_error(self, phase: str, exc: Exception, entry: dict):
        entry["error"] = f"{type(exc).__name__}: {exc}"
        try:
            self._say(f"internal error in {phase}: {type(exc).__name__}: {exc}")
        except Exception:
            pass  # memory itself failing must not kill the loop

    def _ask_idle_question(self, ctx: _TickContext):
        # "untagged": no human-asserted has_tag triple (detector tags carry
        # confidence < 1.0)
        candidates = []
        for node in self.memory.nodes_of_type("ReferenceObject"):
            human_tags = [t for t in
                          self.memory.find_triples(subject=node.memid,
                                                   predicate="has_tag")
                          if t.payload["confidence"] >= 1.0]
            if not human_tags:
                candidates.append(node)
        if not candidates:
            return
        pose = self.world.agent_pose
        nearest = min(candidates, key=lambda n: (
            world.distance((n.payload["position"][0], n.payload["position"][1]), pose.xy),
            n.memid))
        x, y = nearest.payload["position"]
        self._say(f"what is this {nearest.payload['class_label']} at ({x:g},{y:g})?")

    # -- outbound ------------------------------------------------------------

    def snapshot(self) -> dict:
        """Immutable, JSON-ready copy of everything the dashboard shows."""
        refs = []
        for node in self.memory.nodes_of_type("ReferenceObject"):
            tags = sorted({t.payload["obj_literal"] for t in self.memory.find_triples(
                subject=node.memid, predicate="has_tag")})
            refs.append({"memid": node.memid,
                         "class_label": node.payload["class_label"],
                         "position": list(node.payload["position"]),
                         "radius": node.payload["radius"],
                         "last_seen_tick": node.payload["last_seen_tick"],
                         "tags": tags})
        chats = [{"speaker": n.payload["speaker"], "text": n.payload["text"],
                  "tick": n.created_tick}
                 for n in self.memory.nodes_of_type("Chat")[-self.config.snapshot_chats:]]
        player = None
        for node in self.memory.nodes_of_type("Player"):
            player = {"pose": list(node.payload["pose"]),
                      "attention": list(node.payload["attention"])
                      if node.payload["attention"] is not None else None}
            break
        pose = self.world.agent_pose
        pointing = None
        if self.agent_pointing is not None:
            pointing = [self.agent_pointing[0], self.agent_pointing[1]]
        return {
            "tick": self.world.tick,
            "agent": {"pose": [pose.x, pose.y, pose.yaw],
                      "held": [o.class_label for o in self.world.held],
                      "pointing": pointing,
                      "blocked": self.world.blocked},
            "world_bounds": list(self.world.bounds),
            "reference_objects": refs,
            "player": player,
            "dialogue_queue": self.dialogue_queue.listing(),
            "task_queue": self.task_queue.listing(),
            "last_parse": {"utterance": self.last_parse[0], "lf": self.last_parse[1]}
            if self.last_parse else None,
            "chats": chats,
        }


def trace_line(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def trace_dump(entries: list[dict]) -> str:
    return "".join(trace_line(e) + "\n" for e in entries)
