"""Agent memory: a relational store of typed, timestamped nodes.

Every piece of knowledge the agent has lives here as a MemoryNode addressed
by a 32-hex-char memid: reference objects, semantic triples, chats, tasks,
programs, sets, and immutable archives. Tables keep secondary indexes on
node_type and triple predicate; the query engine evaluates the conjunctive
FILTERS subset of the DSL against them.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass

from .dsl import Filters

NODE_TYPES = frozenset({
    "ReferenceObject", "Self", "Player", "Triple", "Chat", "Task",
    "Program", "Set", "Archive",
})

# nodes that occupy a spatial location, usable by within/selector filters
_POSITION_FIELD = {"ReferenceObject": "position", "Self": "pose", "Player": "pose"}


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class InvalidTarget(StoreError):
    pass


class SchemaMismatch(StoreError):
    pass


@dataclass
class MemoryNode:
    memid: str
    node_type: str
    created_tick: int
    last_accessed_tick: int
    payload: dict

    def position(self) -> tuple[float, float] | None:
        key = _POSITION_FIELD.get(self.node_type)
        if key is None:
            return None
        value = self.payload.get(key)
        if value is None:
            return None
        return (value[0], value[1])


_SCHEMAS: dict[str, dict[str, object]] = {
    "ReferenceObject": {"position": "point", "radius": "positive", "class_label": "str",
                        "feature_vec": "unitvec", "last_seen_tick": "int"},
    "Self": {"pose": "pose"},
    "Player": {"name": "str", "pose": "pose", "attention": "point?", "attention_tick": "int?"},
    "Triple": {"subject": "str", "predicate": "str", "obj_memid": "str?",
               "obj_literal": "str?", "confidence": "float"},
    "Chat": {"speaker": "str", "text": "anystr"},
    "Task": {"task_id": "int", "kind": "str", "priority": "int", "status": "str",
             "detail": "anystr"},
    "Program": {"canonical_lf": "str", "speaker": "str"},
    "Set": {"label": "str", "members": "strlist"},
    "Archive": {"source_memid": "str", "node_type": "str", "snapshot": "dict",
                "archived_at_tick": "int"},
}


def _check_field(kind: str, value, name: str):
    optional = kind.endswith("?")
    if optional:
        if value is None:
            return
        kind = kind[:-1]
    if kind == "str":
        ok = isinstance(value, str) and bool(value)
    elif kind == "anystr":
        ok = isinstance(value, str)
    elif kind == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == "float":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind == "positive":
        ok = isinstance(value, (int, float)) and value > 0
    elif kind == "point":
        ok = (isinstance(value, list) and len(value) == 2
              and all(isinstance(v, (int, float)) for v in value))
    elif kind == "pose":
        ok = (isinstance(value, list) and len(value) == 3
              and all(isinstance(v, (int, float)) for v in value))
    elif kind == "unitvec":
        ok = (isinstance(value, list) and len(value) > 0
              and all(isinstance(v, (int, float)) for v in value)
              and abs(math.sqrt(sum(v * v for v in value)) - 1.0) < 1e-6)
    elif kind == "strlist":
        ok = isinstance(value, list) and all(isinstance(v, str) for v in value)
    elif kind == "dict":
        ok = isinstance(value, dict)
    else:  # pragma: no cover
        raise AssertionError(kind)
    if not ok:
        raise SchemaMismatch(f"field {name!r} fails {kind} check: {value!r}")


def reference_object_payload(position, radius, class_label, feature_vec, last_seen_tick) -> dict:
    return {"position": [float(position[0]), float(position[1])], "radius": float(radius),
            "class_label": class_label, "feature_vec": [float(v) for v in feature_vec],
            "last_seen_tick": int(last_seen_tick)}


class MemoryStore:
    """In-process table set; single-writer, owned by the agent loop."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._counter = 0
        self._nodes: dict[str, MemoryNode] = {}  # insertion order = creation order
        self._by_type: dict[str, list[str]] = {}
        self._by_predicate: dict[str, list[str]] = {}
        self._by_subject: dict[str, list[str]] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, memid: str) -> bool:
        return memid in self._nodes

    def memids(self) -> list[str]:
        return list(self._nodes)

    def nodes(self) -> list[MemoryNode]:
        return list(self._nodes.values())

    def fresh_memid(self) -> str:
        h = hashlib.blake2b(f"{self.seed}:{self._counter}".encode(), digest_size=16)
        self._counter += 1
        return h.hexdigest()

    # -- node lifecycle ----------------------------------------------------

    def create_node(self, node_type: str, payload: dict, tick: int) -> str:
        if node_type not in NODE_TYPES:
            raise SchemaMismatch(f"unknown node_type {node_type!r}")
        schema = _SCHEMAS[node_type]
        extra = sorted(set(payload) - set(schema))
        if extra:
            raise SchemaMismatch(f"unknown field {extra[0]!r} for {node_type}")
        for name, kind in schema.items():
            if not str(kind).endswith("?") and name not in payload:
                raise SchemaMismatch(f"missing field {name!r} for {node_type}")
            _check_field(str(kind), payload.get(name), name)
        if node_type == "Triple":
            self._check_triple(payload)

        memid = self.fresh_memid()
        node = MemoryNode(memid=memid, node_type=node_type, created_tick=tick,
                          last_accessed_tick=tick, payload=copy.deepcopy(payload))
        self._nodes[memid] = node
        self._by_type.setdefault(node_type, []).append(memid)
        if node_type == "Triple":
            self._by_predicate.setdefault(payload["predicate"], []).append(memid)
            self._by_subject.setdefault(payload["subject"], []).append(memid)
        return memid

    def _check_triple(self, payload: dict):
        has_memid = payload.get("obj_memid") is not None
        has_literal = payload.get("obj_literal") is not None
        if has_memid == has_literal:
            raise SchemaMismatch("triple needs exactly one of obj_memid / obj_literal")
        if payload["subject"] not in self._nodes:
            raise NotFound(f"triple subject {payload['subject']} not in store")
        if has_memid and payload["obj_memid"] not in self._nodes:
            raise NotFound(f"triple object {payload['obj_memid']} not in store")
        if not 0.0 <= payload["confidence"] <= 1.0:
            raise SchemaMismatch("confidence must be in [0, 1]")

    def get_node(self, memid: str, tick: int) -> MemoryNode:
        node = self._nodes.get(memid)
        if node is None:
            raise NotFound(memid)
        node.last_accessed_tick = max(node.last_accessed_tick, tick)
        return node

    def peek(self, memid: str) -> MemoryNode:
        """get_node without touching the access timestamp."""
        node = self._nodes.get(memid)
        if node is None:
            raise NotFound(memid)
        return node

    def nodes_of_type(self, node_type: str) -> list[MemoryNode]:
        """Nodes of one type in creation order; does not count as an access."""
        return [self._nodes[m] for m in self._by_type.get(node_type, [])]

    def update_node(self, memid: str, updates: dict, tick: int):
        """Patch payload fields (schema-checked) and bump the access time."""
        node = self._nodes.get(memid)
        if node is None:
            raise NotFound(memid)
        schema = _SCHEMAS[node.node_type]
        for name, value in updates.items():
            if name not in schema:
                raise SchemaMismatch(f"unknown field {name!r} for {node.node_type}")
            _check_field(str(schema[name]), value, name)
        node.payload.update(copy.deepcopy(updates))
        node.last_accessed_tick = max(node.last_accessed_tick, tick)

    def add_triple(self, subject: str, predicate: str, tick: int, *,
                   obj_memid: str | None = None, obj_literal: str | None = None,
                   confidence: float = 1.0) -> str:
        return self.create_node("Triple", {
            "subject": subject, "predicate": predicate, "obj_memid": obj_memid,
            "obj_literal": obj_literal, "confidence": confidence,
        }, tick)

    def find_triples(self, subject: str | None = None, predicate: str | None = None,
                     obj_literal: str | None = None) -> list[MemoryNode]:
        """Index-backed triple lookup; does not count as an access."""
        if subject is not None:
            memids = self._by_subject.get(subject, [])
        elif predicate is not None:
            memids = self._by_predicate.get(predicate, [])
        else:
            memids = self._by_type.get("Triple", [])
        out = []
        for memid in memids:
            p = self._nodes[memid].payload
            if predicate is not None and p["predicate"] != predicate:
                continue
            if obj_literal is not None and p["obj_literal"] != obj_literal:
                continue
            out.append(self._nodes[memid])
        return out

    def archive(self, memid: str, tick: int) -> str:
        node = self._nodes.get(memid)
        if node is None:
            raise NotFound(memid)
        if node.node_type == "Archive":
            raise InvalidTarget("cannot archive an archive")
        return self.create_node("Archive", {
            "source_memid": memid, "node_type": node.node_type,
            "snapshot": copy.deepcopy(node.payload), "archived_at_tick": tick,
        }, tick)

    def upsert_reference_object(self, memid: str | None, payload: dict, tick: int) -> str:
        if memid is None:
            return self.create_node("ReferenceObject", payload, tick)
        node = self._nodes.get(memid)
        if node is None:
            raise NotFound(memid)
        if node.node_type != "ReferenceObject":
            raise InvalidTarget(f"{memid} is a {node.node_type}, not a ReferenceObject")
        for name, kind in _SCHEMAS["ReferenceObject"].items():
            if name in payload:
                _check_field(str(kind), payload[name], name)
        node.payload.update(copy.deepcopy(payload))
        node.last_accessed_tick = max(node.last_accessed_tick, tick)
        return memid

    # -- query -------------------------------------------------------------

    def query(self, filters: Filters, tick: int) -> list[str]:
        """Memids satisfying every constraint, ordered by the selector if
        present and by creation order otherwise. Marks results accessed."""
        candidates: list[str] | None = None

        if filters.node_type is not None:
            candidates = list(self._by_type.get(filters.node_type, []))
        for pred, value in filters.tags:
            subjects = set()
            for tmemid in self._by_predicate.get(pred, []):
                p = self._nodes[tmemid].payload
                obj = p["obj_literal"] if p["obj_literal"] is not None else p["obj_memid"]
                if obj == value:
                    subjects.add(p["subject"])
            if candidates is None:
                candidates = [m for m in self._nodes if m in subjects]
            else:
                candidates = [m for m in candidates if m in subjects]

        if candidates is None:
            candidates = list(self._nodes)

        if filters.within is not None:
            wx, wy, dist = filters.within
            candidates = [
                m for m in candidates
                if (pos := self._nodes[m].position()) is not None
                and math.hypot(pos[0] - wx, pos[1] - wy) <= dist
            ]

        order = {m: i for i, m in enumerate(self._nodes)}
        if filters.selector is not None:
            kind, sx, sy = filters.selector
            ranked = []
            for m in candidates:
                pos = self._nodes[m].position()
                if pos is None:
                    continue
                d = math.hypot(pos[0] - sx, pos[1] - sy)
                ranked.append((d if kind == "argmin" else -d, order[m], m))
            candidates = [m for _, _, m in sorted(ranked)]
        else:
            candidates = sorted(candidates, key=lambda m: order[m])

        if filters.limit is not None:
            candidates = candidates[:filters.limit]

        for m in candidates:
            node = self._nodes[m]
            node.last_accessed_tick = max(node.last_accessed_tick, tick)
        return candidates

    # -- snapshot ----------------------------------------------------------

    def dump(self) -> str:
        """Serialize every table; dump -> load -> dump is byte-identical."""
        doc = {
            "format": "deskbot-memory-v1",
            "seed": self.seed,
            "counter": self._counter,
            "nodes": [
                {"memid": n.memid, "node_type": n.node_type,
                 "created_tick": n.created_tick,
                 "last_accessed_tick": n.last_accessed_tick,
                 "payload": n.payload}
                for n in self._nodes.values()
            ],
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"

    @classmethod
    def load(cls, text: str) -> "MemoryStore":
        doc = json.loads(text)
        if doc.get("format") != "deskbot-memory-v1":
            raise StoreError(f"unknown snapshot format {doc.get('format')!r}")
        store = cls(seed=doc["seed"])
        for rec in doc["nodes"]:
            node = MemoryNode(memid=rec["memid"], node_type=rec["node_type"],
                              created_tick=rec["created_tick"],
                              last_accessed_tick=rec["last_accessed_tick"],
                              payload=rec["payload"])
            store._nodes[node.memid] = node
            store._by_type.setdefault(node.node_type, []).append(node.memid)
            if node.node_type == "Triple":
                p = node.payload
                store._by_predicate.setdefault(p["predicate"], []).append(node.memid)
                store._by_subject.setdefault(p["subject"], []).append(node.memid)
        store._counter = doc["counter"]
        return store
