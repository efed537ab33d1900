from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deskbot import perception, world
from deskbot.memory import MemoryStore
from deskbot.world import pseudo_feature


def scene(objects=(), pose=world.Pose(0.0, 0.0, 0.0), human=None):
    return world.WorldState(width=20.0, height=20.0, origin=(0.0, 0.0),
                            objects=tuple(objects), agent_pose=pose, human=human,
                            events=())


def disc(oid, x, y, cls="chair", props=(), seed=1, radius=0.3):
    return world.WorldObject(oid=oid, class_label=cls, properties=tuple(props),
                             position=(x, y), radius=radius, feature_seed=seed)


def view_of(state, fov=math.pi, rng=12.0):
    return world.observe(state, world.WorldConfig(fov_half_angle=fov, view_range=rng))


# -- fast pass -------------------------------------------------------------------


def test_fast_updates_self_pose():
    memory = MemoryStore()
    s = scene(pose=world.Pose(3.0, 4.0, 1.0))
    perception.perceive_fast(view_of(s), memory, 0)
    selves = memory.nodes_of_type("Self")
    assert len(selves) == 1
    assert selves[0].payload["pose"] == [3.0, 4.0, 1.0]
    s2 = scene(pose=world.Pose(5.0, 4.0, 1.0))
    perception.perceive_fast(view_of(s2), memory, 1)
    assert len(memory.nodes_of_type("Self")) == 1
    assert memory.nodes_of_type("Self")[0].payload["pose"] == [5.0, 4.0, 1.0]


def test_fast_records_visible_pointing():
    memory = MemoryStore()
    human = world.HumanAvatar(pose=world.Pose(2.0, 0.0, 0.0),
                              pointing_target=(4.0, 1.0))
    perception.perceive_fast(view_of(scene(human=human)), memory, 5)
    assert perception.attention_location(memory, 5) == (4.0, 1.0)


def test_fast_no_human_leaves_attention_alone():
    memory = MemoryStore()
    human = world.HumanAvatar(pose=world.Pose(2.0, 0.0, 0.0),
                              pointing_target=(4.0, 1.0))
    perception.perceive_fast(view_of(scene(human=human)), memory, 0)
    perception.perceive_fast(view_of(scene()), memory, 1)  # human gone from view
    assert perception.attention_location(memory, 1) == (4.0, 1.0)


def test_attention_expires_after_horizon():
    memory = MemoryStore()
    human = world.HumanAvatar(pose=world.Pose(2.0, 0.0, 0.0),
                              pointing_target=(4.0, 1.0))
    perception.perceive_fast(view_of(scene(human=human)), memory, 0)
    assert perception.attention_location(memory, 300) == (4.0, 1.0)
    perception.perceive_fast(view_of(scene()), memory, 301, attention_horizon=300)
    assert perception.attention_location(memory, 301) is None


def test_fast_cost_independent_of_objects():
    # fast pass must not touch reference objects at all
    memory = MemoryStore()
    objs = [disc(f"o{i:04d}", 1.0 + i * 0.7, 2.0, seed=i) for i in range(10)]
    perception.perceive_fast(view_of(scene(objs)), memory, 0)
    assert memory.nodes_of_type("ReferenceObject") == []


# -- dedup -----------------------------------------------------------------------


def unit(vec):
    norm = math.sqrt(sum(v * v for v in vec))
    return [v / norm for v in vec]


def ref(memory, x, y, cls="chair", feature=None, seed=1, tick=0):
    return memory.create_node("ReferenceObject", {
        "position": [x, y], "radius": 0.3, "class_label": cls,
        "feature_vec": feature or list(pseudo_feature(seed)),
        "last_seen_tick": tick}, tick)


def detection(x, y, cls="chair", feature=None, seed=1, tick=0):
    return perception.Detection(class_label=cls, properties=(), position=(x, y),
                                radius=0.3,
                                feature_vec=tuple(feature or pseudo_feature(seed)),
                                observed_tick=tick)


def test_dedup_identical_is_match_similarity_one():
    memory = MemoryStore()
    memid = ref(memory, 5.0, 2.0, seed=7)
    decision = perception.deduplicate(detection(5.0, 2.0, seed=7), memory)
    assert decision.verdict == "match" and decision.memid == memid
    assert decision.feature_similarity == pytest.approx(1.0)
    assert decision.distance == pytest.approx(0.0)


def test_dedup_same_class_far_away_is_new():
    memory = MemoryStore()
    ref(memory, 5.0, 2.0, seed=7)
    decision = perception.deduplicate(detection(10.0, 2.0, seed=7), memory)
    assert decision.verdict == "new" and decision.memid is None


def test_dedup_low_similarity_is_new():
    memory = MemoryStore()
    ref(memory, 5.0, 2.0, seed=7)
    decision = perception.deduplicate(detection(5.0, 2.0, seed=8), memory)
    # different seeds give uncorrelated vectors, far below tau
    assert perception.cosine(pseudo_feature(7), pseudo_feature(8)) < 0.9
    assert decision.verdict == "new"


def test_dedup_prefers_higher_similarity():
    # candidate features at known cosines to the detection: 0.95 vs 0.92
    memory = MemoryStore()
    e1 = [1.0] + [0.0] * 15

    def at_cosine(c):
        return unit([c, math.sqrt(1 - c * c)] + [0.0] * 14)

    ref(memory, 5.0, 2.0, feature=at_cosine(0.92))
    winner = ref(memory, 5.4, 2.0, feature=at_cosine(0.95))
    d = detection(5.1, 2.0, feature=e1)
    # independent check over the candidate set
    sims = [perception.cosine(n.payload["feature_vec"], d.feature_vec)
            for n in memory.nodes_of_type("ReferenceObject")]
    assert max(sims) == pytest.approx(0.95)
    decision = perception.deduplicate(d, memory)
    assert decision.verdict == "match" and decision.memid == winner
    assert decision.feature_similarity == pytest.approx(0.95)


def test_dedup_similarity_tie_breaks_nearest():
    memory = MemoryStore()
    feature = list(pseudo_feature(3))
    ref(memory, 5.5, 2.0, feature=feature)
    nearest = ref(memory, 5.1, 2.0, feature=feature)
    decision = perception.deduplicate(detection(5.0, 2.0, feature=feature), memory)
    assert decision.memid == nearest


# -- slow pass -------------------------------------------------------------------


def test_slow_fresh_chair_creates_tagged_node():
    memory = MemoryStore()
    s = scene([disc("o1", 5.0, 2.0, props=("red", "wooden"))])
    decisions = perception.perceive_slow(view_of(s), memory, 0)
    assert [d.verdict for d in decisions] == ["new"]
    refs = memory.nodes_of_type("ReferenceObject")
    assert len(refs) == 1
    tags = {t.payload["obj_literal"]
            for t in memory.find_triples(subject=refs[0].memid, predicate="has_tag")}
    assert tags == {"chair", "red", "wooden"}
    colours = memory.find_triples(subject=refs[0].memid, predicate="has_colour")
    assert [t.payload["obj_literal"] for t in colours] == ["red"]


def test_slow_second_look_matches_everything():
    memory = MemoryStore()
    s = scene([disc("o1", 5.0, 2.0), disc("o2", 3.0, 1.0, cls="cup", seed=2)])
    perception.perceive_slow(view_of(s), memory, 0)
    count = len(memory)
    decisions = perception.perceive_slow(view_of(s), memory, 1)
    assert all(d.verdict == "match" for d in decisions)
    assert len(memory) == count


def test_slow_small_move_updates_position_same_node():
    memory = MemoryStore()
    perception.perceive_slow(view_of(scene([disc("o1", 5.0, 2.0)])), memory, 0)
    moved = scene([disc("o1", 5.1, 2.0)])  # 0.1 < epsilon 0.75
    decisions = perception.perceive_slow(view_of(moved), memory, 1)
    assert decisions[0].verdict == "match"
    assert decisions[0].distance == pytest.approx(0.1)
    refs = memory.nodes_of_type("ReferenceObject")
    assert len(refs) == 1
    assert refs[0].payload["position"] == [5.1, 2.0]
    assert refs[0].payload["last_seen_tick"] == 1


@given(st.integers(0, 10**9), st.integers(2, 6))
@settings(max_examples=40, deadline=None)
def test_slow_idempotent_over_k_observations(seed, k):
    rng = random.Random(seed)
    objs = []
    taken = []
    for i in range(rng.randint(0, 8)):
        for _ in range(40):
            x, y = rng.uniform(1, 19), rng.uniform(1, 19)
            if all(math.hypot(x - a, y - b) > 2.1 for a, b in taken):
                taken.append((x, y))
                objs.append(disc(f"o{i:04d}", x, y,
                                 cls=rng.choice(["chair", "cup"]), seed=i))
                break
    s = scene(objs, pose=world.Pose(10.0, 10.0, 0.0))
    memory = MemoryStore()
    view = view_of(s, fov=math.pi, rng=30.0)
    perception.perceive_slow(view, memory, 0)
    once = len(memory.nodes_of_type("ReferenceObject"))
    assert once == len(view.objects)
    for i in range(1, k):
        perception.perceive_slow(view, memory, i)
    assert len(memory.nodes_of_type("ReferenceObject")) == once


def test_soundness_every_node_has_a_world_object():
    rng = random.Random(5)
    objs = [disc(f"o{i:04d}", 2.0 + 2.5 * i, 3.0, seed=i) for i in range(5)]
    s = scene(objs, pose=world.Pose(10.0, 3.0, 0.0))
    memory = MemoryStore()
    for tick in range(10):
        perception.perceive_slow(view_of(s, fov=math.pi, rng=30.0), memory, tick)
    positions = {tuple(o.position) for o in objs}
    for node in memory.nodes_of_type("ReferenceObject"):
        assert tuple(node.payload["position"]) in positions


def test_jitter_uses_rng_and_stays_matched_with_wide_epsilon():
    memory = MemoryStore()
    s = scene([disc("o1", 5.0, 2.0)])
    rng = random.Random(0)
    perception.perceive_slow(view_of(s), memory, 0, jitter_sigma=0.05, rng=rng)
    node = memory.nodes_of_type("ReferenceObject")[0]
    assert node.payload["position"] != [5.0, 2.0]
    decisions = perception.perceive_slow(view_of(s), memory, 1,
                                         jitter_sigma=0.05, rng=rng)
    assert decisions[0].verdict == "match"
