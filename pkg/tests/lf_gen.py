"""Seeded random generators for logical forms, stores, and filters."""

from __future__ import annotations

import random

from deskbot import dsl
from deskbot.memory import MemoryStore
from deskbot.world import pseudo_feature

TAG_VALUES = ["chair", "cup", "table", "ball", "box", "stool", "mug", "lamp"]
PREDICATES = ["has_tag", "has_colour", "has_size", "made_of"]
COLORS = ["red", "blue", "green", "yellow"]


def random_filters(rng: random.Random, allow_selector: bool = True) -> dsl.Filters:
    tags = []
    for _ in range(rng.randint(0, 2)):
        pred = rng.choice(PREDICATES)
        value = rng.choice(COLORS if pred == "has_colour" else TAG_VALUES)
        tags.append((pred, value))
    node_type = rng.choice([None, "ReferenceObject", "Chat", "Task", "Triple"])
    within = None
    if rng.random() < 0.3:
        within = (rng.uniform(-5, 15), rng.uniform(-5, 15), rng.uniform(0.5, 12))
    if not tags and node_type is None and within is None:
        tags.append(("has_tag", rng.choice(TAG_VALUES)))
    selector = None
    if allow_selector and rng.random() < 0.3:
        selector = (rng.choice(["argmin", "argmax"]),
                    rng.uniform(-5, 15), rng.uniform(-5, 15))
    limit = rng.randint(1, 6) if rng.random() < 0.3 else None
    return dsl.Filters(tags=tuple(tags), node_type=node_type, within=within,
                       selector=selector, limit=limit)


def _random_refobj(rng: random.Random) -> dsl.ReferenceObjectSpec:
    span = None
    if rng.random() < 0.4:
        start = rng.randint(0, 5)
        span = dsl.Span(start, start + rng.randint(1, 3))
    return dsl.ReferenceObjectSpec(filters=random_filters(rng), text_span=span)


def _random_location(rng: random.Random) -> dsl.LocationSpec:
    kind = rng.choice(["reference_object", "absolute", "relative"])
    if kind == "reference_object":
        return dsl.LocationSpec(reference_object=_random_refobj(rng))
    if kind == "absolute":
        return dsl.LocationSpec(absolute=(rng.uniform(-10, 10), rng.uniform(-10, 10)))
    return dsl.LocationSpec(relative=(rng.choice(sorted(dsl.DIRECTIONS)),
                                      rng.uniform(0.1, 5.0)))


def _random_action(rng: random.Random) -> dsl.ActionSpec:
    action_type = rng.choice(sorted(dsl.ACTION_TYPES))
    kwargs = {}
    if action_type == "MOVE":
        kwargs["location"] = _random_location(rng)
    elif action_type == "TURN":
        if rng.random() < 0.5:
            kwargs["facing"] = dsl.Facing(relative_yaw=rng.uniform(-3.14, 3.14))
        else:
            kwargs["facing"] = dsl.Facing(location=_random_location(rng))
    elif action_type == "POINT":
        if rng.random() < 0.5:
            kwargs["reference_object"] = _random_refobj(rng)
        else:
            kwargs["location"] = _random_location(rng)
    elif action_type == "GRASP":
        kwargs["reference_object"] = _random_refobj(rng)
    if rng.random() < 0.25:
        if rng.random() < 0.5:
            kwargs["repeat"] = dsl.Condition(kind="repeat_n", n=rng.randint(1, 5))
        else:
            kwargs["repeat"] = dsl.Condition(kind="until_blocked")
    return dsl.ActionSpec(action_type=action_type, **kwargs)


def random_lf(rng: random.Random) -> dsl.LogicalForm:
    dialogue_type = rng.choice(sorted(dsl.DIALOGUE_TYPES))
    if dialogue_type == "HUMAN_GIVE_COMMAND":
        actions = tuple(_random_action(rng) for _ in range(rng.randint(1, 3)))
        return dsl.LogicalForm(dialogue_type=dialogue_type, action_sequence=actions)
    if dialogue_type == "GET_MEMORY":
        return dsl.LogicalForm(dialogue_type=dialogue_type, filters=random_filters(rng))
    if dialogue_type == "PUT_MEMORY":
        return dsl.LogicalForm(dialogue_type=dialogue_type, upsert=dsl.Upsert(
            predicate=rng.choice(PREDICATES), value=rng.choice(TAG_VALUES + COLORS)))
    return dsl.NOOP


def random_store(rng: random.Random, max_nodes: int = 1000,
                 min_nodes: int = 1) -> MemoryStore:
    """Store with a random mix of node types and triples for query tests."""
    store = MemoryStore(seed=rng.randint(0, 10**9))
    budget = rng.randint(min_nodes, max_nodes)
    tick = 0
    subjects = []
    while len(store) < budget:
        tick += rng.randint(0, 2)
        kind = rng.random()
        if kind < 0.45 or not subjects:
            memid = store.create_node("ReferenceObject", {
                "position": [rng.uniform(-5, 15), rng.uniform(-5, 15)],
                "radius": rng.uniform(0.1, 1.0),
                "class_label": rng.choice(TAG_VALUES),
                "feature_vec": list(pseudo_feature(rng.randint(0, 500))),
                "last_seen_tick": tick,
            }, tick)
            subjects.append(memid)
        elif kind < 0.65:
            subject = rng.choice(subjects)
            pred = rng.choice(PREDICATES)
            value = rng.choice(COLORS if pred == "has_colour" else TAG_VALUES)
            store.add_triple(subject, pred, tick, obj_literal=value)
        elif kind < 0.8:
            memid = store.create_node("Chat", {
                "speaker": rng.choice(["human", "agent"]),
                "text": rng.choice(["hello", "go", "stop", "what"]),
            }, tick)
            subjects.append(memid)
        elif kind < 0.9:
            memid = store.create_node("Task", {
                "task_id": len(store), "kind": rng.choice(["move", "turn"]),
                "priority": rng.randint(0, 10),
                "status": rng.choice(["queued", "running", "finished"]),
                "detail": "",
            }, tick)
            subjects.append(memid)
        else:
            store.create_node("Player", {
                "name": f"p{len(store)}",
                "pose": [rng.uniform(0, 10), rng.uniform(0, 10), 0.0],
                "attention": None, "attention_tick": None,
            }, tick)
    return store
