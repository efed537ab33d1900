"""The controller: a dialogue queue of objects that interpret utterances.

Dispatch turns validated logical forms into dialogue objects; the queue
steps the highest-priority one per tick. The Interpret object resolves every
action against memory before committing any task, so a command that needs
clarification pushes none. Clarification waits a bounded window for the
world (pointing, tagging) to make the pending reference resolvable, then
re-dispatches the original form untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import dsl, tasks
from .memory import MemoryStore
from .perception import attention_location
from .world import Pose, normalize_angle

PRIORITY_CLARIFY = 2
PRIORITY_INTERPRET = 1
PRIORITY_DESCRIBE = 0
PRIORITY_PUT_MEMORY = 0


class DispatchError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class NeedsClarification:
    """An unresolved reference: no memory node satisfies these filters."""

    spec: dsl.ReferenceObjectSpec

    def phrase(self) -> str:
        parts = dict(self.spec.filters.tags)
        words = []
        if "has_colour" in parts:
            words.append(parts["has_colour"])
        if "has_tag" in parts:
            words.append(parts["has_tag"])
        if not words:
            words = [v for _, v in self.spec.filters.tags] or ["that"]
        return " ".join(words)


@dataclass
class StepEffects:
    chats: list[str] = field(default_factory=list)
    tasks_pushed: list[int] = field(default_factory=list)
    enqueued: list[str] = field(default_factory=list)
    resolved_memids: list[str] = field(default_factory=list)
    terminal: bool = False
    note: str = ""


class DialogueObject:
    kind = "dialogue"
    priority = 0

    def __init__(self, speaker: str):
        self.speaker = speaker
        self.seq = -1  # arrival order, set by the queue
        self.created_tick = -1

    def step(self, ctx) -> StepEffects:
        raise NotImplementedError


class DialogueQueue:
    def __init__(self):
        self._objects: list[DialogueObject] = []
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._objects)

    def enqueue(self, obj: DialogueObject, tick: int):
        obj.seq = self._next_seq
        self._next_seq += 1
        obj.created_tick = tick
        self._objects.append(obj)

    def step_one(self, ctx) -> tuple[DialogueObject, StepEffects] | None:
        """Step the highest-priority object (FIFO among equals), at most one
        per tick; terminal objects leave the queue."""
        if not self._objects:
            return None
        obj = min(self._objects, key=lambda o: (-o.priority, o.seq))
        effects = obj.step(ctx)
        if effects.terminal:
            self._objects.remove(obj)
        return obj, effects

    def listing(self) -> list[dict]:
        ordered = sorted(self._objects, key=lambda o: (-o.priority, o.seq))
        return [{"kind": o.kind, "priority": o.priority, "speaker": o.speaker}
                for o in ordered]


def dispatch(lf: dsl.LogicalForm, speaker: str, queue: DialogueQueue, tick: int):
    """Validated logical form -> dialogue object on the queue (NOOP -> none)."""
    violations = dsl.validate(lf)
    if violations:
        raise DispatchError(violations)
    if lf.dialogue_type == "HUMAN_GIVE_COMMAND":
        queue.enqueue(Interpret(lf, speaker), tick)
    elif lf.dialogue_type == "GET_MEMORY":
        queue.enqueue(DescribeQueue(speaker), tick)
    elif lf.dialogue_type == "PUT_MEMORY":
        queue.enqueue(PutMemory(lf, speaker), tick)
    # NOOP: nothing to do


def resolve_reference_object(spec: dsl.ReferenceObjectSpec, memory: MemoryStore,
                             agent_pose: Pose, tick: int,
                             attention_horizon: int = 300):
    """Find the one reference object the filters mean.

    Several candidates: prefer the one nearest the human's recorded
    pointing/attention location, else nearest the agent. None: clarify.
    """
    filters = replace(spec.filters, node_type="ReferenceObject")
    memids = memory.query(filters, tick)
    if not memids:
        return NeedsClarification(spec=spec)
    if len(memids) == 1:
        return memids[0]
    anchor = attention_location(memory, tick, attention_horizon)
    if anchor is None:
        anchor = agent_pose.xy
    best = min(
        enumerate(memids),
        key=lambda im: (_dist(memory.peek(im[1]).payload["position"], anchor), im[0]),
    )
    return best[1]


def _dist(position, point) -> float:
    return math.hypot(position[0] - point[0], position[1] - point[1])


def resolve_location(loc: dsl.LocationSpec, memory: MemoryStore, agent_pose: Pose,
                     tick: int, attention_horizon: int = 300):
    """LocationSpec -> world point, or NeedsClarification."""
    if loc.reference_object is not None:
        got = resolve_reference_object(loc.reference_object, memory, agent_pose,
                                       tick, attention_horizon)
        if isinstance(got, NeedsClarification):
            return got
        position = memory.peek(got).payload["position"]
        return (position[0], position[1])
    if loc.absolute is not None:
        return loc.absolute
    direction, dist = loc.relative
    offset = {"forward": 0.0, "left": math.pi / 2, "back": math.pi, "right": -math.pi / 2}
    heading = normalize_angle(agent_pose.yaw + offset[direction])
    return (agent_pose.x + dist * math.cos(heading),
            agent_pose.y + dist * math.sin(heading))


class Interpret(DialogueObject):
    """Turns one HUMAN_GIVE_COMMAND form into tasks, all-or-nothing."""

    kind = "interpret"
    priority = PRIORITY_INTERPRET

    def __init__(self, lf: dsl.LogicalForm, speaker: str):
        super().__init__(speaker)
        self.lf = lf

    def step(self, ctx) -> StepEffects:
        effects = StepEffects(terminal=True)
        ctx.memory.create_node("Program", {
            "canonical_lf": dsl.to_canonical(self.lf), "speaker": self.speaker,
        }, ctx.tick)

        plan: list = []  # ("task", Task) | ("pause",) | ("resume",)
        resolved: list[str] = []
        for action in self.lf.action_sequence:
            planned = self._plan_action(action, ctx, resolved)
            if isinstance(planned, NeedsClarification):
                ctx.enqueue(Clarify(planned.spec, self.speaker, self.lf))
                effects.enqueued.append("clarify")
                effects.note = f"needs clarification: {planned.phrase()}"
                return effects
            plan.extend(planned)
        effects.resolved_memids = resolved

        for entry in plan:
            if entry[0] == "task":
                task_id = ctx.push_task(entry[1])
                effects.tasks_pushed.append(task_id)
            elif entry[0] == "pause":
                ctx.pause_tasks()
            else:
                ctx.resume_tasks()
        return effects

    def _resolve_point(self, loc: dsl.LocationSpec, ctx, resolved: list[str]):
        """Like resolve_location, but records which memid a reference hit."""
        if loc.reference_object is not None:
            got = resolve_reference_object(loc.reference_object, ctx.memory,
                                           ctx.agent_pose(), ctx.tick,
                                           ctx.config.attention_horizon)
            if isinstance(got, NeedsClarification):
                return got
            resolved.append(got)
            position = ctx.memory.peek(got).payload["position"]
            return (position[0], position[1])
        return resolve_location(loc, ctx.memory, ctx.agent_pose(), ctx.tick,
                                ctx.config.attention_horizon)

    def _plan_action(self, action: dsl.ActionSpec, ctx, resolved: list[str]):
        cfg = ctx.config
        pose = ctx.agent_pose()
        if action.action_type == "STOP":
            return [("pause",)]
        if action.action_type == "RESUME":
            return [("resume",)]

        if action.action_type == "MOVE":
            target = self._resolve_point(action.location, ctx, resolved)
            if isinstance(target, NeedsClarification):
                return target
            task = tasks.Move(target, tolerance=cfg.move_tolerance)
        elif action.action_type == "TURN":
            if action.facing.relative_yaw is not None:
                task = tasks.TurnTask(relative=action.facing.relative_yaw)
            else:
                target = self._resolve_point(action.facing.location, ctx, resolved)
                if isinstance(target, NeedsClarification):
                    return target
                yaw = math.atan2(target[1] - pose.y, target[0] - pose.x)
                task = tasks.TurnTask(target_yaw=yaw)
        elif action.action_type == "POINT":
            if action.reference_object is not None:
                got = resolve_reference_object(action.reference_object, ctx.memory,
                                               pose, ctx.tick, cfg.attention_horizon)
                if isinstance(got, NeedsClarification):
                    return got
                resolved.append(got)
                position = ctx.memory.peek(got).payload["position"]
                target = (position[0], position[1])
            else:
                target = self._resolve_point(action.location, ctx, resolved)
                if isinstance(target, NeedsClarification):
                    return target
            task = tasks.Point(target, hold_ticks=cfg.point_hold_ticks)
        elif action.action_type == "GRASP":
            got = resolve_reference_object(action.reference_object, ctx.memory, pose,
                                           ctx.tick, cfg.attention_horizon)
            if isinstance(got, NeedsClarification):
                return got
            resolved.append(got)
            task = tasks.GraspTask(got)
        else:  # pragma: no cover - validate() bars unknown types
            raise DispatchError([dsl.Violation("action_type", action.action_type)])

        if action.repeat is not None:
            task = tasks.Loop(task, action.repeat)
        return [("task", task)]


class Clarify(DialogueObject):
    """Asks about an unresolvable reference and waits for it to resolve."""

    kind = "clarify"
    priority = PRIORITY_CLARIFY

    def __init__(self, pending: dsl.ReferenceObjectSpec, speaker: str,
                 original_lf: dsl.LogicalForm):
        super().__init__(speaker)
        self.pending = pending
        self.original_lf = original_lf
        self.asked = False

    def step(self, ctx) -> StepEffects:
        effects = StepEffects()
        phrase = NeedsClarification(self.pending).phrase()
        if not self.asked:
            self.asked = True
            text = (f"I don't know what you mean by \"{phrase}\"; "
                    "can you point at it or tag one?")
            ctx.say(text)
            effects.chats.append(text)

        got = resolve_reference_object(self.pending, ctx.memory, ctx.agent_pose(),
                                       ctx.tick, ctx.config.attention_horizon)
        if not isinstance(got, NeedsClarification):
            ctx.dispatch(self.original_lf, self.speaker)
            effects.enqueued.append("interpret")
            effects.terminal = True
            effects.note = "resolved"
            return effects
        if ctx.tick - self.created_tick >= ctx.config.clarification_window:
            text = f"sorry, I still can't find \"{phrase}\"; giving up."
            ctx.say(text)
            effects.chats.append(text)
            effects.terminal = True
            effects.note = "timed_out"
        return effects


class DescribeQueue(DialogueObject):
    """Answers "what are you doing" from the task queue's memory mirror."""

    kind = "describe_queue"
    priority = PRIORITY_DESCRIBE

    def step(self, ctx) -> StepEffects:
        listing = ctx.task_listing()
        if not listing:
            text = "nothing queued."
        else:
            parts = [f"{t['kind']}#{t['task_id']} {t['status']} ({t['detail']})"
                     for t in listing]
            text = "task queue: " + "; ".join(parts)
        ctx.say(text)
        return StepEffects(chats=[text], terminal=True)


class PutMemory(DialogueObject):
    """Writes a tag triple on the object nearest the pointing location."""

    kind = "put_memory"
    priority = PRIORITY_PUT_MEMORY

    def __init__(self, lf: dsl.LogicalForm, speaker: str):
        super().__init__(speaker)
        self.lf = lf

    def step(self, ctx) -> StepEffects:
        effects = StepEffects(terminal=True)
        anchor = attention_location(ctx.memory, ctx.tick, ctx.config.attention_horizon)
        if anchor is None:
            text = "I don't know which object you mean; point at one first."
            ctx.say(text)
            effects.chats.append(text)
            return effects
        objects = ctx.memory.nodes_of_type("ReferenceObject")
        if not objects:
            text = "I don't see any objects yet."
            ctx.say(text)
            effects.chats.append(text)
            return effects
        nearest = min(
            enumerate(objects),
            key=lambda io: (_dist(io[1].payload["position"], anchor), io[0]),
        )[1]
        upsert = self.lf.upsert
        if not ctx.memory.find_triples(subject=nearest.memid, predicate=upsert.predicate,
                                       obj_literal=upsert.value):
            ctx.memory.add_triple(nearest.memid, upsert.predicate, ctx.tick,
                                  obj_literal=upsert.value)
        text = f"ok, noted: that {nearest.payload['class_label']} is \"{upsert.value}\"."
        ctx.say(text)
        effects.chats.append(text)
        return effects
