"""Tasks: self-contained low-level world interactions, and their queue.

A task is stepped at most once per agent tick and issues at most one physics
command per step through the execution context. The queue steps the highest
priority non-paused task (FIFO among equals) and mirrors every status change
into a Task memory node within the same call.

Lifecycle: queued -> running -> {paused <-> running} -> finished | failed.
Two bookkeeping back-edges exist so that at most one task is ever running:
running -> queued when a higher-priority task preempts, and
paused -> queued on resume (the task is re-selected by priority as usual).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

from . import world
from .dsl import Condition
from .memory import MemoryStore

ACTIVE = ("queued", "running")
TERMINAL = ("finished", "failed")


def _clamp(v: float, limit: float) -> float:
    return max(-limit, min(limit, v))


@dataclass(frozen=True)
class CommandResult:
    pose: world.Pose
    blocked: bool
    held_oids: tuple[str, ...]


@dataclass
class StepReport:
    task_id: int
    kind: str
    status: str
    command: str | None = None
    blocked: bool = False
    note: str = ""


class Task:
    """Base task. Subclasses implement _step and may issue one command."""

    kind = "task"

    def __init__(self, priority: int = 0):
        self.priority = priority
        self.task_id = -1
        self.memid: str | None = None
        self.status = "queued"
        self.created_tick = -1
        self.start_pose: world.Pose | None = None
        self.failure_reason = ""

    def detail(self) -> str:
        return ""

    def step(self, ctx) -> StepReport:
        if self.status == "queued":
            self.status = "running"
            if self.start_pose is None:
                self.start_pose = ctx.pose()
        report = StepReport(task_id=self.task_id, kind=self.kind, status=self.status)
        try:
            self._step(ctx, report)
        except world.CommandRejected as e:
            self._fail(e.reason)
        report.status = self.status
        if self.failure_reason:
            report.note = self.failure_reason
        return report

    def _step(self, ctx, report: StepReport):
        raise NotImplementedError

    def _finish(self):
        self.status = "finished"

    def _fail(self, reason: str):
        self.status = "failed"
        self.failure_reason = reason

    def _command(self, ctx, cmd, report: StepReport) -> CommandResult:
        result = ctx.command(cmd)
        report.command = _render_command(cmd)
        report.blocked = result.blocked
        return result


def _render_command(cmd) -> str:
    if isinstance(cmd, world.Forward):
        return f"forward({cmd.distance!r})"
    if isinstance(cmd, world.Turn):
        return f"turn({cmd.dyaw!r})"
    if isinstance(cmd, world.Grasp):
        return f"grasp({cmd.oid})"
    return "noop()"


class _Navigator:
    """Shared turn-then-forward controller with the consecutive-block rule."""

    def __init__(self):
        self.blocked_streak = 0

    def navigate(self, task: Task, ctx, report: StepReport,
                 target: tuple[float, float], remaining: float):
        pose = ctx.pose()
        bearing = math.atan2(target[1] - pose.y, target[0] - pose.x)
        err = world.normalize_angle(bearing - pose.yaw)
        if abs(err) >= ctx.config.heading_tolerance:
            task._command(ctx, world.Turn(_clamp(err, ctx.config.max_turn)), report)
            return
        result = task._command(
            ctx, world.Forward(min(ctx.config.max_step, remaining)), report)
        if result.blocked:
            self.blocked_streak += 1
            if self.blocked_streak >= ctx.config.blocked_fail_streak:
                task._fail("blocked")
        else:
            self.blocked_streak = 0


class Move(Task):
    kind = "move"

    def __init__(self, target: tuple[float, float], tolerance: float = 0.5,
                 priority: int = 0):
        super().__init__(priority)
        self.target = (float(target[0]), float(target[1]))
        self.tolerance = tolerance
        self._nav = _Navigator()

    def detail(self) -> str:
        return f"target=({self.target[0]:g},{self.target[1]:g})"

    def _step(self, ctx, report: StepReport):
        pose = ctx.pose()
        d = world.distance(pose.xy, self.target)
        if d <= self.tolerance:
            self._finish()
            return
        self._nav.navigate(self, ctx, report, self.target, d)


class TurnTask(Task):
    kind = "turn"

    def __init__(self, target_yaw: float | None = None,
                 relative: float | None = None, priority: int = 0):
        if (target_yaw is None) == (relative is None):
            raise ValueError("exactly one of target_yaw / relative")
        super().__init__(priority)
        self.target_yaw = target_yaw
        self.relative = relative

    def detail(self) -> str:
        if self.target_yaw is not None:
            return f"yaw={self.target_yaw:g}"
        return f"relative={self.relative:g}"

    def _step(self, ctx, report: StepReport):
        pose = ctx.pose()
        if self.target_yaw is None:
            self.target_yaw = world.normalize_angle(self.start_pose.yaw + self.relative)
        err = world.normalize_angle(self.target_yaw - pose.yaw)
        if abs(err) < ctx.config.turn_tolerance:
            self._finish()
            return
        self._command(ctx, world.Turn(_clamp(err, ctx.config.max_turn)), report)


class Point(Task):
    kind = "point"

    def __init__(self, target: tuple[float, float], hold_ticks: int = 20,
                 priority: int = 0):
        super().__init__(priority)
        self.target = (float(target[0]), float(target[1]))
        self.hold_ticks = hold_ticks
        self._remaining: int | None = None

    def detail(self) -> str:
        return f"target=({self.target[0]:g},{self.target[1]:g})"

    def _step(self, ctx, report: StepReport):
        if self._remaining is None:
            ctx.set_pointing(self.target, self.hold_ticks)
            self._remaining = self.hold_ticks
        self._remaining -= 1
        if self._remaining <= 0:
            self._finish()


class GraspTask(Task):
    kind = "grasp"

    def __init__(self, target_memid: str, priority: int = 0):
        super().__init__(priority)
        self.target_memid = target_memid
        self._nav = _Navigator()

    def detail(self) -> str:
        return f"target={self.target_memid[:8]}"

    def _step(self, ctx, report: StepReport):
        try:
            node = ctx.memory.peek(self.target_memid)
        except Exception:
            self._fail("unknown_target")
            return
        target = tuple(node.payload["position"])
        pose = ctx.pose()
        d = world.distance(pose.xy, target)
        if d > ctx.config.grasp_range * 0.9:
            self._nav.navigate(self, ctx, report, target, d - ctx.config.grasp_range * 0.5)
            return
        view = ctx.observe()
        if not view.objects:
            self._fail("no_object_visible")
            return
        obj = min(view.objects, key=lambda o: (world.distance(o.position, target), o.oid))
        result = self._command(ctx, world.Grasp(obj.oid), report)
        if obj.oid in result.held_oids:
            self._finish()
        else:
            self._fail("grasp_out_of_range")


class Say(Task):
    kind = "say"

    def __init__(self, text: str, priority: int = 0):
        super().__init__(priority)
        self.text = text

    def detail(self) -> str:
        return f"text={self.text[:24]!r}"

    def _step(self, ctx, report: StepReport):
        ctx.say(self.text)
        self._finish()


class Sequence(Task):
    kind = "sequence"

    def __init__(self, children: list[Task], priority: int = 0):
        super().__init__(priority)
        self.children = list(children)
        self._index = 0

    def detail(self) -> str:
        return f"child {self._index + 1}/{len(self.children)}"

    def _step(self, ctx, report: StepReport):
        if self._index >= len(self.children):
            self._finish()
            return
        child = self.children[self._index]
        child.task_id = self.task_id
        inner = child.step(ctx)
        report.command, report.blocked, report.note = inner.command, inner.blocked, inner.note
        if child.status == "failed":
            self._fail(child.failure_reason or "child_failed")
        elif child.status == "finished":
            self._index += 1
            if self._index >= len(self.children):
                self._finish()


class Loop(Task):
    """Re-runs a copy of the child task: n times, or until a blocked tick."""

    kind = "loop"

    def __init__(self, child: Task, condition: Condition, priority: int = 0):
        super().__init__(priority)
        self._template = copy.deepcopy(child)
        self.condition = condition
        self._current: Task | None = None
        self._runs = 0

    def detail(self) -> str:
        if self.condition.kind == "repeat_n":
            return f"{self._template.kind} run {self._runs + 1}/{self.condition.n}"
        return f"{self._template.kind} until blocked"

    def _step(self, ctx, report: StepReport):
        if self._current is None or self._current.status in TERMINAL:
            self._current = copy.deepcopy(self._template)
            self._current.task_id = self.task_id
        child = self._current
        inner = child.step(ctx)
        report.command, report.blocked, report.note = inner.command, inner.blocked, inner.note
        if self.condition.kind == "until_blocked":
            if inner.blocked:
                self._finish()
                return
            if child.status == "failed" and child.failure_reason == "blocked":
                self._finish()
                return
        if child.status == "failed":
            self._fail(child.failure_reason or "child_failed")
            return
        if child.status == "finished":
            self._runs += 1
            if self.condition.kind == "repeat_n" and self._runs >= self.condition.n:
                self._finish()


class TaskQueue:
    """Priority queue of active tasks with a memory mirror."""

    def __init__(self):
        self._tasks: list[Task] = []
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._tasks)

    def active(self) -> list[Task]:
        return sorted(self._tasks, key=lambda t: (-t.priority, t.task_id))

    def push(self, task: Task, memory: MemoryStore, tick: int) -> int:
        task.task_id = self._next_id
        self._next_id += 1
        task.created_tick = tick
        task.memid = memory.create_node("Task", {
            "task_id": task.task_id, "kind": task.kind, "priority": task.priority,
            "status": task.status, "detail": task.detail(),
        }, tick)
        self._tasks.append(task)
        return task.task_id

    def _mirror(self, task: Task, memory: MemoryStore, tick: int):
        if task.memid is not None:
            memory.update_node(task.memid, {"status": task.status,
                                            "detail": task.detail()}, tick)

    def step_highest(self, ctx) -> StepReport | None:
        """Step the single best eligible task; None when nothing can run."""
        eligible = [t for t in self._tasks if t.status in ACTIVE]
        if not eligible:
            return None
        chosen = min(eligible, key=lambda t: (-t.priority, t.task_id))
        for task in self._tasks:
            if task is not chosen and task.status == "running":
                task.status = "queued"
                self._mirror(task, ctx.memory, ctx.tick)
        report = chosen.step(ctx)
        self._mirror(chosen, ctx.memory, ctx.tick)
        if chosen.status in TERMINAL:
            self._tasks.remove(chosen)
        return report

    def pause_running(self, memory: MemoryStore, tick: int):
        for task in self._tasks:
            if task.status == "running":
                task.status = "paused"
                self._mirror(task, memory, tick)

    def resume(self, memory: MemoryStore, tick: int):
        for task in self._tasks:
            if task.status == "paused":
                task.status = "queued"
                self._mirror(task, memory, tick)

    def listing(self) -> list[dict]:
        return [
            {"task_id": t.task_id, "kind": t.kind, "status": t.status,
             "priority": t.priority, "detail": t.detail()}
            for t in self.active()
        ]
