"""Deterministic 2D simulated world.

The world is a rectangle of continuous coordinates holding disc-shaped
objects, one agent, and an optional scripted human avatar. All state is
immutable; step_physics returns a new WorldState and is the only way time
advances. Identical scenario text plus an identical command sequence gives a
bit-identical state trace.
"""

from __future__ import annotations

import hashlib
import math
import shlex
from dataclasses import dataclass, replace

FEATURE_DIM = 16


def normalize_angle(a: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a < 0:
        a += 2.0 * math.pi
    return a - math.pi


def distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def pseudo_feature(seed: int) -> tuple[float, ...]:
    """Stable unit-norm pseudo-feature vector derived from an integer seed.

    Hash-based so it is identical across platforms and library versions.
    """
    comps = []
    for i in range(FEATURE_DIM):
        h = hashlib.blake2b(f"{seed}:{i}".encode(), digest_size=8).digest()
        # map 64 bits to (-1, 1), never exactly 0 for all components
        comps.append(int.from_bytes(h, "big") / 2**63 - 1.0)
    norm = math.sqrt(sum(c * c for c in comps))
    return tuple(c / norm for c in comps)


class CommandRejected(Exception):
    """A physics command the world refuses to execute.

    reason is one of: no_such_object, invalid_command.
    """

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class WorldObject:
    oid: str
    class_label: str
    properties: tuple[str, ...]
    position: tuple[float, float]
    radius: float
    feature_seed: int

    @property
    def feature_vec(self) -> tuple[float, ...]:
        return pseudo_feature(self.feature_seed)


@dataclass(frozen=True)
class ScriptEvent:
    """Scripted human behavior: at `tick`, say `text` or point at `point`."""

    tick: int
    kind: str  # "chat" | "point"
    text: str | None = None
    point: tuple[float, float] | None = None


@dataclass(frozen=True)
class HumanAvatar:
    pose: Pose
    pointing_target: tuple[float, float] | None = None


@dataclass(frozen=True)
class WorldConfig:
    max_step: float = 0.25
    max_turn: float = 0.25
    fov_half_angle: float = math.pi / 3.0
    view_range: float = 6.0
    grasp_range: float = 0.6


DEFAULT_CONFIG = WorldConfig()


# Physics commands
@dataclass(frozen=True)
class Forward:
    distance: float


@dataclass(frozen=True)
class Turn:
    dyaw: float


@dataclass(frozen=True)
class Grasp:
    oid: str


@dataclass(frozen=True)
class Noop:
    pass


@dataclass(frozen=True)
class WorldState:
    width: float
    height: float
    origin: tuple[float, float]
    objects: tuple[WorldObject, ...]
    agent_pose: Pose
    human: HumanAvatar | None
    events: tuple[ScriptEvent, ...]
    seed: int = 0
    tick: int = 0
    held: tuple[WorldObject, ...] = ()
    blocked: bool = False

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max)"""
        ox, oy = self.origin
        return (ox, oy, ox + self.width, oy + self.height)

    def in_bounds(self, p: tuple[float, float]) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1

    def find_object(self, oid: str) -> WorldObject | None:
        for obj in self.objects:
            if obj.oid == oid:
                return obj
        return None

    def chats_due(self, tick: int) -> tuple[ScriptEvent, ...]:
        return tuple(e for e in self.events if e.kind == "chat" and e.tick == tick)


@dataclass(frozen=True)
class HumanView:
    pose: Pose
    pointing_target: tuple[float, float] | None


@dataclass(frozen=True)
class WorldView:
    """What the agent can sense this tick. Pure snapshot, no world access."""

    agent_pose: Pose
    held: tuple[WorldObject, ...]
    objects: tuple[WorldObject, ...]
    human: HumanView | None
    tick: int


def _segment_hits_disc(p: tuple[float, float], q: tuple[float, float],
                       center: tuple[float, float], radius: float) -> bool:
    # distance from center to segment pq
    vx, vy = q[0] - p[0], q[1] - p[1]
    wx, wy = center[0] - p[0], center[1] - p[1]
    seg_len2 = vx * vx + vy * vy
    t = 0.0 if seg_len2 == 0 else max(0.0, min(1.0, (wx * vx + wy * vy) / seg_len2))
    closest = (p[0] + t * vx, p[1] + t * vy)
    return distance(closest, center) < radius


def step_physics(state: WorldState, cmd, config: WorldConfig = DEFAULT_CONFIG) -> WorldState:
    """Advance the world by exactly one tick under one command.

    Forward motion that would leave the bounds or cross an object is frozen
    and flags the returned state as blocked. Raises CommandRejected for
    commands the world refuses (bad magnitudes, unknown grasp target); the
    caller still owns advancing the tick afterwards (e.g. with Noop).
    """
    pose = state.agent_pose
    objects = state.objects
    held = state.held
    blocked = False

    if isinstance(cmd, Noop):
        pass
    elif isinstance(cmd, Forward):
        if not (0.0 <= cmd.distance <= config.max_step):
            raise CommandRejected("invalid_command", f"forward distance {cmd.distance}")
        target = (pose.x + cmd.distance * math.cos(pose.yaw),
                  pose.y + cmd.distance * math.sin(pose.yaw))
        hit = not state.in_bounds(target) or any(
            _segment_hits_disc(pose.xy, target, o.position, o.radius) for o in objects
        )
        if hit:
            blocked = True
        else:
            pose = replace(pose, x=target[0], y=target[1])
    elif isinstance(cmd, Turn):
        if abs(cmd.dyaw) > config.max_turn + 1e-12:
            raise CommandRejected("invalid_command", f"turn {cmd.dyaw}")
        pose = replace(pose, yaw=normalize_angle(pose.yaw + cmd.dyaw))
    elif isinstance(cmd, Grasp):
        obj = state.find_object(cmd.oid)
        if obj is None:
            raise CommandRejected("no_such_object", cmd.oid)
        if distance(pose.xy, obj.position) > config.grasp_range:
            blocked = True
        else:
            objects = tuple(o for o in objects if o.oid != cmd.oid)
            held = held + (obj,)
    else:
        raise CommandRejected("invalid_command", f"unknown command {cmd!r}")

    new_tick = state.tick + 1
    human = state.human
    for event in state.events:
        if event.kind == "point" and event.tick == new_tick and human is not None:
            human = replace(human, pointing_target=event.point)
    return replace(state, agent_pose=pose, objects=objects, held=held,
                   blocked=blocked, tick=new_tick, human=human)


def _visible(pose: Pose, point: tuple[float, float], config: WorldConfig) -> bool:
    d = distance(pose.xy, point)
    if d > config.view_range:
        return False
    if d == 0.0:
        return True
    bearing = math.atan2(point[1] - pose.y, point[0] - pose.x)
    return abs(normalize_angle(bearing - pose.yaw)) <= config.fov_half_angle


def observe(state: WorldState, config: WorldConfig = DEFAULT_CONFIG) -> WorldView:
    """Field-of-view snapshot: objects and human whose centers fall inside
    the view cone, sorted by oid. Pure; never mutates the world."""
    visible = tuple(sorted(
        (o for o in state.objects if _visible(state.agent_pose, o.position, config)),
        key=lambda o: o.oid,
    ))
    human = None
    if state.human is not None and _visible(state.agent_pose, state.human.pose.xy, config):
        human = HumanView(pose=state.human.pose, pointing_target=state.human.pointing_target)
    return WorldView(agent_pose=state.agent_pose, held=state.held,
                     objects=visible, human=human, tick=state.tick)


# ---------------------------------------------------------------------------
# Scenario files
#
# Line-oriented text, full grammar in docs/SCENARIO.md. Sections:
#   [world]    width/height/seed and optional origin_x/origin_y, key = value
#   [agent]    x/y/yaw, key = value
#   [objects]  one per line: class x y radius props(comma-sep or -) feature_seed
#   [human]    x/y/yaw lines, plus events:
#                tick N chat "..."        tick N point X Y


def load_scenario(text: str) -> WorldState:
    world_kv: dict[str, float] = {}
    agent_kv: dict[str, float] = {}
    human_kv: dict[str, float] = {}
    objects: list[WorldObject] = []
    events: list[ScriptEvent] = []
    saw_human = False
    section = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("world", "agent", "objects", "human"):
                raise ScenarioError(f"unknown section [{section}]", lineno)
            if section == "human":
                saw_human = True
            continue
        if section is None:
            raise ScenarioError("content before any [section]", lineno)

        if section in ("world", "agent") or (section == "human" and "=" in line):
            key, _, value = line.partition("=")
            if not _:
                raise ScenarioError("expected key = value", lineno)
            key = key.strip()
            try:
                num = float(value.strip())
            except ValueError:
                raise ScenarioError(f"bad number for {key!r}: {value.strip()!r}", lineno)
            {"world": world_kv, "agent": agent_kv, "human": human_kv}[section][key] = num
        elif section == "objects":
            parts = line.split()
            if len(parts) != 6:
                raise ScenarioError(
                    "object line needs: class x y radius props feature_seed", lineno)
            cls, xs, ys, rs, props, seed_s = parts
            try:
                x, y, r = float(xs), float(ys), float(rs)
                feature_seed = int(seed_s)
            except ValueError:
                raise ScenarioError("bad object numbers", lineno)
            properties = () if props == "-" else tuple(props.split(","))
            objects.append(WorldObject(
                oid=f"o{len(objects):04d}", class_label=cls, properties=properties,
                position=(x, y), radius=r, feature_seed=feature_seed))
        else:  # human event line
            try:
                parts = shlex.split(line)
            except ValueError as e:
                raise ScenarioError(f"bad event line: {e}", lineno)
            if len(parts) < 3 or parts[0] != "tick":
                raise ScenarioError("expected: tick N chat \"...\" | tick N point X Y", lineno)
            try:
                tick = int(parts[1])
            except ValueError:
                raise ScenarioError(f"bad tick {parts[1]!r}", lineno)
            if parts[2] == "chat" and len(parts) == 4:
                events.append(ScriptEvent(tick=tick, kind="chat", text=parts[3]))
            elif parts[2] == "point" and len(parts) == 5:
                try:
                    px, py = float(parts[3]), float(parts[4])
                except ValueError:
                    raise ScenarioError("bad point coordinates", lineno)
                events.append(ScriptEvent(tick=tick, kind="point", point=(px, py)))
            else:
                raise ScenarioError(f"unknown event {parts[2]!r}", lineno)

    for key in ("width", "height"):
        if key not in world_kv:
            raise ScenarioError(f"[world] missing {key}")
    for key in ("x", "y", "yaw"):
        if key not in agent_kv:
            raise ScenarioError(f"[agent] missing {key}")

    human = None
    if saw_human:
        for key in ("x", "y", "yaw"):
            if key not in human_kv:
                raise ScenarioError(f"[human] missing {key}")
        human = HumanAvatar(pose=Pose(human_kv["x"], human_kv["y"], human_kv["yaw"]))
    elif events:
        raise ScenarioError("events require a [human] section")

    state = WorldState(
        width=world_kv["width"],
        height=world_kv["height"],
        origin=(world_kv.get("origin_x", 0.0), world_kv.get("origin_y", 0.0)),
        objects=tuple(objects),
        agent_pose=Pose(agent_kv["x"], agent_kv["y"], agent_kv["yaw"]),
        human=human,
        events=tuple(events),
        seed=int(world_kv.get("seed", 0)),
    )
    _validate_world(state)

    # apply any tick-0 pointing immediately
    for event in state.events:
        if event.kind == "point" and event.tick == 0 and state.human is not None:
            state = replace(state, human=replace(state.human, pointing_target=event.point))
    return state


def _validate_world(state: WorldState):
    if state.width <= 0 or state.height <= 0:
        raise ScenarioError("world extents must be positive")
    if not state.in_bounds(state.agent_pose.xy):
        raise ScenarioError(f"agent at {state.agent_pose.xy} outside world bounds")
    for obj in state.objects:
        if obj.radius <= 0:
            raise ScenarioError(f"object {obj.oid} radius must be > 0")
        if not state.in_bounds(obj.position):
            raise ScenarioError(f"object {obj.oid} at {obj.position} outside world bounds")
    for i, a in enumerate(state.objects):
        for b in state.objects[i + 1:]:
            if distance(a.position, b.position) <= a.radius + b.radius:
                raise ScenarioError(f"objects {a.oid} and {b.oid} overlap")
