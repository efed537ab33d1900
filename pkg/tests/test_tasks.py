from __future__ import annotations

import math

import pytest

from deskbot import tasks, world
from deskbot.agent_core import AgentConfig
from deskbot.dsl import Condition
from deskbot.memory import MemoryStore
from deskbot.world import pseudo_feature
from oracles import move_tick_bound


class Harness:
    """Minimal execution context: a world, a memory, and one command per tick."""

    def __init__(self, state: world.WorldState, config: AgentConfig | None = None):
        self.world = state
        self.memory = MemoryStore()
        self.config = config or AgentConfig()
        self.tick = 0
        self.said: list[str] = []
        self.pointing = None
        self._issued = False

    def pose(self):
        return self.world.agent_pose

    def observe(self):
        return world.observe(self.world, self.config.world_config())

    def command(self, cmd):
        assert not self._issued, "one command per tick"
        self.world = world.step_physics(self.world, cmd, self.config.world_config())
        self._issued = True
        return tasks.CommandResult(pose=self.world.agent_pose,
                                   blocked=self.world.blocked,
                                   held_oids=tuple(o.oid for o in self.world.held))

    def say(self, text):
        self.said.append(text)

    def set_pointing(self, target, hold_ticks):
        self.pointing = (target, hold_ticks)

    def run_tick(self, queue):
        self._issued = False
        report = queue.step_highest(self)
        if not self._issued:
            self.world = world.step_physics(self.world, world.Noop(),
                                            self.config.world_config())
        self.tick = self.world.tick
        return report


def flat_world(x=0.0, y=0.0, yaw=0.0, objects=()):
    return world.WorldState(width=20.0, height=20.0, origin=(0.0, 0.0),
                            objects=tuple(objects), agent_pose=world.Pose(x, y, yaw),
                            human=None, events=())


def disc(oid, x, y, radius=0.3, cls="box"):
    return world.WorldObject(oid=oid, class_label=cls, properties=(),
                             position=(x, y), radius=radius, feature_seed=1)


def drive(harness, queue, max_ticks=500):
    reports = []
    for _ in range(max_ticks):
        report = harness.run_tick(queue)
        reports.append(report)
        if report is None or report.status in ("finished", "failed"):
            break
    return reports


def test_move_finishes_within_kinematic_bound():
    h = Harness(flat_world(5.0, 5.0, 0.0))
    q = tasks.TaskQueue()
    q.push(tasks.Move((8.0, 9.0), tolerance=0.5), h.memory, 0)
    reports = drive(h, q)
    bound = move_tick_bound((5.0, 5.0), (8.0, 9.0), 0.0, 0.5)
    assert reports[-1].status == "finished"
    assert len(reports) <= bound
    assert world.distance(h.world.agent_pose.xy, (8.0, 9.0)) <= 0.5


def test_move_already_there_finishes_without_commands():
    h = Harness(flat_world(5.0, 5.0))
    q = tasks.TaskQueue()
    q.push(tasks.Move((5.2, 5.0), tolerance=0.5), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "finished" and reports[-1].command is None


def test_move_progress_non_increasing_once_aligned():
    h = Harness(flat_world(2.0, 2.0, 0.0))
    q = tasks.TaskQueue()
    target = (9.0, 7.0)
    q.push(tasks.Move(target, tolerance=0.5), h.memory, 0)
    dists = []
    for _ in range(200):
        report = h.run_tick(q)
        if report is None or report.status in ("finished", "failed"):
            break
        if report.command and report.command.startswith("forward"):
            dists.append(world.distance(h.world.agent_pose.xy, target))
    assert dists == sorted(dists, reverse=True)


def test_move_fails_after_ten_consecutive_blocked_ticks():
    wall = disc("w1", 6.0, 5.0, radius=0.4)
    h = Harness(flat_world(5.0, 5.0, 0.0, objects=[wall]))
    q = tasks.TaskQueue()
    q.push(tasks.Move((9.0, 5.0), tolerance=0.3), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "failed"
    assert reports[-1].note == "blocked"
    blocked_tail = [r for r in reports if r.blocked]
    assert len(blocked_tail) == 10


def test_step_on_empty_queue_is_noop():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    assert h.run_tick(q) is None
    assert h.world.tick == 1  # the world still advances


def test_turn_reaches_target_yaw():
    h = Harness(flat_world(yaw=0.0))
    q = tasks.TaskQueue()
    q.push(tasks.TurnTask(relative=2.0), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "finished"
    assert abs(world.normalize_angle(h.world.agent_pose.yaw - 2.0)) < 0.02


def test_turn_toward_absolute_yaw():
    h = Harness(flat_world(yaw=1.0))
    q = tasks.TaskQueue()
    q.push(tasks.TurnTask(target_yaw=-2.0), h.memory, 0)
    drive(h, q)
    assert abs(world.normalize_angle(h.world.agent_pose.yaw - (-2.0))) < 0.02


def test_point_holds_for_hold_ticks():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    q.push(tasks.Point((3.0, 4.0), hold_ticks=5), h.memory, 0)
    reports = drive(h, q)
    assert h.pointing == ((3.0, 4.0), 5)
    assert len(reports) == 5
    assert reports[-1].status == "finished"


def test_grasp_navigates_then_grasps():
    cup = disc("c1", 3.0, 0.5, radius=0.2, cls="cup")
    h = Harness(flat_world(0.0, 0.0, 0.0, objects=[cup]))
    memid = h.memory.create_node("ReferenceObject", {
        "position": [3.0, 0.5], "radius": 0.2, "class_label": "cup",
        "feature_vec": list(pseudo_feature(1)), "last_seen_tick": 0}, 0)
    q = tasks.TaskQueue()
    q.push(tasks.GraspTask(memid), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "finished"
    assert [o.oid for o in h.world.held] == ["c1"]


def test_grasp_unknown_target_fails():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    q.push(tasks.GraspTask("0" * 32), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "failed"
    assert reports[-1].note == "unknown_target"


def test_say_emits_chat():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    q.push(tasks.Say("hello there"), h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "finished"
    assert h.said == ["hello there"]


def test_sequence_runs_children_in_order_single_entry():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    seq = tasks.Sequence([tasks.Say("one"), tasks.Say("two"), tasks.Say("three")])
    q.push(seq, h.memory, 0)
    assert len(q) == 1 and len(seq.children) == 3
    reports = drive(h, q)
    assert h.said == ["one", "two", "three"]
    assert reports[-1].status == "finished"


def test_sequence_fails_on_first_child_failure():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    seq = tasks.Sequence([tasks.Say("ok"), tasks.GraspTask("0" * 32), tasks.Say("no")])
    q.push(seq, h.memory, 0)
    reports = drive(h, q)
    assert reports[-1].status == "failed"
    assert h.said == ["ok"]


def test_loop_repeat_n():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    q.push(tasks.Loop(tasks.Say("beep"), Condition(kind="repeat_n", n=3)), h.memory, 0)
    reports = drive(h, q)
    assert h.said == ["beep", "beep", "beep"]
    assert reports[-1].status == "finished"


def test_loop_until_blocked():
    wall = disc("w1", 4.0, 5.0, radius=0.4)
    h = Harness(flat_world(2.0, 5.0, 0.0, objects=[wall]))
    q = tasks.TaskQueue()
    child = tasks.Move((5.0, 5.0), tolerance=0.1)  # target beyond the wall
    q.push(tasks.Loop(child, Condition(kind="until_blocked")), h.memory, 0)
    reports = drive(h, q, max_ticks=100)
    assert reports[-1].status == "finished"
    assert reports[-1].blocked


# -- queue discipline ----------------------------------------------------------


def test_push_fifo_among_equal_priority():
    h = Harness(flat_world())
    q = tasks.TaskQueue()
    a = q.push(tasks.Say("a"), h.memory, 0)
    b = q.push(tasks.Say("b"), h.memory, 0)
    assert [t["task_id"] for t in q.listing()] == [a, b]
    h.run_tick(q)
    h.run_tick(q)
    assert h.said == ["a", "b"]


def test_priority_preempts_and_returns():
    h = Harness(flat_world(5.0, 5.0, 0.0))
    q = tasks.TaskQueue()
    move_id = q.push(tasks.Move((9.0, 5.0), tolerance=0.3), h.memory, 0)
    for _ in range(3):
        h.run_tick(q)
    teleop_id = q.push(tasks.TurnTask(relative=math.pi / 8, priority=10), h.memory, 3)
    stepped = []
    for _ in range(200):
        report = h.run_tick(q)
        if report is None:
            break
        stepped.append(report.task_id)
    # the teleop task runs immediately and to completion, then the move resumes
    assert stepped[0] == teleop_id
    first_move_after = stepped.index(move_id)
    assert all(t == teleop_id for t in stepped[:first_move_after])
    assert world.distance(h.world.agent_pose.xy, (9.0, 5.0)) <= 0.3


def test_at_most_one_running_and_mirror_consistent():
    h = Harness(flat_world(5.0, 5.0, 0.0))
    q = tasks.TaskQueue()
    q.push(tasks.Move((9.0, 5.0), tolerance=0.3), h.memory, 0)
    q.push(tasks.Say("queued behind"), h.memory, 0)
    q.push(tasks.TurnTask(relative=1.0, priority=10), h.memory, 0)
    for _ in range(60):
        h.run_tick(q)
        running = [t for t in q.listing() if t["status"] == "running"]
        assert len(running) <= 1
        for t in q.listing():
            node = next(n for n in h.memory.nodes_of_type("Task")
                        if n.payload["task_id"] == t["task_id"])
            assert node.payload["status"] == t["status"]
        if len(q) == 0:
            break
    assert len(q) == 0


def test_pause_resume_reaches_same_final_position():
    def run(pause_at: int | None):
        h = Harness(flat_world(5.0, 5.0, 0.0))
        q = tasks.TaskQueue()
        q.push(tasks.Move((9.0, 8.0), tolerance=0.5), h.memory, 0)
        for i in range(300):
            if pause_at is not None and i == pause_at:
                q.pause_running(h.memory, h.tick)
            if pause_at is not None and i == pause_at + 7:
                q.resume(h.memory, h.tick)
            h.run_tick(q)
            if len(q) == 0:
                break
        return h.world.agent_pose

    uninterrupted = run(None)
    paused = run(5)
    assert (paused.x, paused.y) == (uninterrupted.x, uninterrupted.y)


def test_pause_statuses_and_idempotence():
    h = Harness(flat_world(5.0, 5.0, 0.0))
    q = tasks.TaskQueue()
    q.pause_running(h.memory, 0)  # empty queue: no-op
    q.push(tasks.Move((9.0, 5.0), tolerance=0.3), h.memory, 0)
    h.run_tick(q)
    q.pause_running(h.memory, h.tick)
    q.pause_running(h.memory, h.tick)  # double pause == single
    assert [t["status"] for t in q.listing()] == ["paused"]
    pose_before = h.world.agent_pose
    for _ in range(5):
        assert h.run_tick(q) is None  # paused tasks are never stepped
    assert h.world.agent_pose == pose_before
    q.resume(h.memory, h.tick)
    q.resume(h.memory, h.tick)
    reports = drive(h, q)
    assert reports[-1].status == "finished"
