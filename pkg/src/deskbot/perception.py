"""Perception: everything the controller may use goes through memory.

The fast pass keeps self pose, the human player, and the attention location
current at O(1) cost. The slow pass is the simulated detector: it turns
every visible world object into a Detection and reconciles it against
memory, deciding per detection whether it is a brand-new object or another
view of a known one (position within epsilon, feature cosine above tau).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .memory import MemoryStore, reference_object_payload
from .nlparser import COLOR_TERMS
from .world import WorldView


@dataclass(frozen=True)
class Detection:
    class_label: str
    properties: tuple[str, ...]
    position: tuple[float, float]
    radius: float
    feature_vec: tuple[float, ...]
    observed_tick: int


@dataclass(frozen=True)
class DedupDecision:
    verdict: str  # "match" | "new"
    memid: str | None
    distance: float
    feature_similarity: float


def cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    return max(-1.0, min(1.0, dot))  # unit vectors by contract


def perceive_fast(view: WorldView, memory: MemoryStore, tick: int,
                  attention_horizon: int = 300):
    """Update Self pose, the human Player node, and the attention location."""
    pose = [view.agent_pose.x, view.agent_pose.y, view.agent_pose.yaw]
    selves = memory.nodes_of_type("Self")
    if selves:
        memory.update_node(selves[0].memid, {"pose": pose}, tick)
    else:
        memory.create_node("Self", {"pose": pose}, tick)

    if view.human is not None:
        hpose = [view.human.pose.x, view.human.pose.y, view.human.pose.yaw]
        player = _player_node(memory, "human")
        if player is None:
            memory.create_node("Player", {"name": "human", "pose": hpose,
                                          "attention": None, "attention_tick": None}, tick)
            player = _player_node(memory, "human")
        else:
            memory.update_node(player.memid, {"pose": hpose}, tick)
        if view.human.pointing_target is not None:
            memory.update_node(player.memid, {
                "attention": list(view.human.pointing_target), "attention_tick": tick,
            }, tick)

    # expire stale attention
    for player in memory.nodes_of_type("Player"):
        seen = player.payload.get("attention_tick")
        if seen is not None and tick - seen > attention_horizon:
            memory.update_node(player.memid, {"attention": None,
                                              "attention_tick": None}, tick)


def _player_node(memory: MemoryStore, name: str):
    for node in memory.nodes_of_type("Player"):
        if node.payload["name"] == name:
            return node
    return None


def attention_location(memory: MemoryStore, tick: int,
                       attention_horizon: int = 300) -> tuple[float, float] | None:
    """The human's recorded pointing/looking-at location, if fresh."""
    player = _player_node(memory, "human")
    if player is None:
        return None
    attention = player.payload.get("attention")
    seen = player.payload.get("attention_tick")
    if attention is None or seen is None or tick - seen > attention_horizon:
        return None
    return (attention[0], attention[1])


def deduplicate(detection: Detection, memory: MemoryStore,
                epsilon: float = 0.75, tau: float = 0.9) -> DedupDecision:
    """New object, or another view of a known one?

    A match needs the same class, center distance under epsilon, and feature
    cosine at least tau; among several candidates the most feature-similar
    wins, with ties going to the nearest.
    """
    best = None
    for index, node in enumerate(memory.nodes_of_type("ReferenceObject")):
        if node.payload["class_label"] != detection.class_label:
            continue
        pos = node.payload["position"]
        d = math.hypot(pos[0] - detection.position[0], pos[1] - detection.position[1])
        sim = cosine(node.payload["feature_vec"], detection.feature_vec)
        if d < epsilon and sim >= tau:
            key = (-sim, d, index)
            if best is None or key < best[0]:
                best = (key, node.memid, d, sim)
    if best is None:
        return DedupDecision(verdict="new", memid=None,
                             distance=math.inf, feature_similarity=-1.0)
    return DedupDecision(verdict="match", memid=best[1],
                         distance=best[2], feature_similarity=best[3])


def perceive_slow(view: WorldView, memory: MemoryStore, tick: int, *,
                  epsilon: float = 0.75, tau: float = 0.9,
                  jitter_sigma: float = 0.0,
                  rng: random.Random | None = None) -> list[DedupDecision]:
    """Detailed pass: detect every visible object, dedup, write to memory."""
    decisions = []
    for obj in view.objects:
        position = obj.position
        if jitter_sigma > 0 and rng is not None:
            position = (position[0] + rng.gauss(0.0, jitter_sigma),
                        position[1] + rng.gauss(0.0, jitter_sigma))
        detection = Detection(class_label=obj.class_label, properties=obj.properties,
                              position=position, radius=obj.radius,
                              feature_vec=obj.feature_vec, observed_tick=tick)
        decision = deduplicate(detection, memory, epsilon, tau)
        payload = reference_object_payload(detection.position, detection.radius,
                                           detection.class_label, detection.feature_vec,
                                           tick)
        memid = memory.upsert_reference_object(decision.memid, payload, tick)
        _ensure_tags(memory, memid, detection, tick)
        decisions.append(decision)
    return decisions


DETECTOR_CONFIDENCE = 0.9  # below 1.0 so human-asserted tags are tellable apart


def _ensure_tags(memory: MemoryStore, memid: str, detection: Detection, tick: int):
    wanted = [("has_tag", detection.class_label)]
    for prop in detection.properties:
        wanted.append(("has_tag", prop))
        if prop in COLOR_TERMS:
            wanted.append(("has_colour", prop))
    for predicate, value in wanted:
        if not memory.find_triples(subject=memid, predicate=predicate, obj_literal=value):
            memory.add_triple(memid, predicate, tick, obj_literal=value,
                              confidence=DETECTOR_CONFIDENCE)
