"""Logical forms: the agent's internal program representation.

A logical form is a small tree of typed records. The canonical text form is
compact JSON with sorted keys and no insignificant whitespace, so two forms
are structurally equal exactly when their canonical texts are byte-equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

DIALOGUE_TYPES = frozenset({"HUMAN_GIVE_COMMAND", "GET_MEMORY", "PUT_MEMORY", "NOOP"})
ACTION_TYPES = frozenset({"MOVE", "TURN", "POINT", "GRASP", "STOP", "RESUME"})
DIRECTIONS = frozenset({"left", "right", "forward", "back"})
CONDITION_KINDS = frozenset({"repeat_n", "until_blocked"})

# Keys of a filters document that are not triple predicates.
RESERVED_FILTER_KEYS = frozenset({"node_type", "within", "selector", "limit"})
SELECTOR_KINDS = frozenset({"argmin", "argmax"})


class CanonicalParseError(ValueError):
    """Raised by from_canonical on text that does not encode a logical form.

    Carries a best-effort character position of the problem.
    """

    def __init__(self, message: str, pos: int = 0):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


@dataclass(frozen=True)
class Span:
    """Half-open token range [start, end) into the source utterance."""

    start: int
    end: int


@dataclass(frozen=True)
class Filters:
    """Conjunctive memory query: every constraint must hold.

    tags are (predicate, value) pairs, e.g. ("has_tag", "chair"); within is
    (x, y, distance); selector is (kind, x, y) ordering results by distance
    to the point, nearest first for argmin.
    """

    tags: tuple[tuple[str, str], ...] = ()
    node_type: str | None = None
    within: tuple[float, float, float] | None = None
    selector: tuple[str, float, float] | None = None
    limit: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(sorted(set(self.tags))))


@dataclass(frozen=True)
class ReferenceObjectSpec:
    filters: Filters
    text_span: Span | None = None


@dataclass(frozen=True)
class LocationSpec:
    """Exactly one of reference_object / absolute / relative is set."""

    reference_object: ReferenceObjectSpec | None = None
    absolute: tuple[float, float] | None = None
    relative: tuple[str, float] | None = None  # (direction, distance)


@dataclass(frozen=True)
class Facing:
    """Turn target: a relative yaw in radians or a location to face."""

    relative_yaw: float | None = None
    location: LocationSpec | None = None


@dataclass(frozen=True)
class Condition:
    kind: str
    n: int | None = None


@dataclass(frozen=True)
class ActionSpec:
    action_type: str
    location: LocationSpec | None = None
    facing: Facing | None = None
    reference_object: ReferenceObjectSpec | None = None
    repeat: Condition | None = None


@dataclass(frozen=True)
class Upsert:
    """Tag assertion carried by a PUT_MEMORY form."""

    predicate: str
    value: str


@dataclass(frozen=True)
class LogicalForm:
    dialogue_type: str
    action_sequence: tuple[ActionSpec, ...] | None = None
    filters: Filters | None = None
    upsert: Upsert | None = None


NOOP = LogicalForm(dialogue_type="NOOP")


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str

    def __str__(self):
        return f"{self.path}: {self.rule}"


# ---------------------------------------------------------------------------
# Validation


def validate(lf: LogicalForm) -> list[Violation]:
    """Check every type invariant; an empty list means the form is valid."""
    out: list[Violation] = []
    if lf.dialogue_type not in DIALOGUE_TYPES:
        out.append(Violation("dialogue_type", f"unknown dialogue_type {lf.dialogue_type!r}"))
        return out

    want_actions = lf.dialogue_type == "HUMAN_GIVE_COMMAND"
    want_filters = lf.dialogue_type == "GET_MEMORY"
    want_upsert = lf.dialogue_type == "PUT_MEMORY"

    if want_actions:
        if not lf.action_sequence:
            out.append(Violation("action_sequence", "required and non-empty for HUMAN_GIVE_COMMAND"))
        else:
            for i, act in enumerate(lf.action_sequence):
                _validate_action(act, f"action_sequence[{i}]", out)
    elif lf.action_sequence is not None:
        out.append(Violation("action_sequence", f"not allowed for {lf.dialogue_type}"))

    if want_filters:
        if lf.filters is None:
            out.append(Violation("filters", "required for GET_MEMORY"))
        else:
            _validate_filters(lf.filters, "filters", out)
    elif lf.filters is not None:
        out.append(Violation("filters", f"not allowed for {lf.dialogue_type}"))

    if want_upsert:
        if lf.upsert is None:
            out.append(Violation("upsert", "required for PUT_MEMORY"))
        elif not lf.upsert.predicate or not lf.upsert.value:
            out.append(Violation("upsert", "predicate and value must be non-empty"))
    elif lf.upsert is not None:
        out.append(Violation("upsert", f"not allowed for {lf.dialogue_type}"))

    return out


def _validate_action(act: ActionSpec, path: str, out: list[Violation]):
    if act.action_type not in ACTION_TYPES:
        out.append(Violation(f"{path}.action_type", f"unknown action_type {act.action_type!r}"))
        return

    need = {
        "MOVE": {"location"},
        "TURN": {"facing"},
        "POINT": set(),  # exactly one of location / reference_object, below
        "GRASP": {"reference_object"},
        "STOP": set(),
        "RESUME": set(),
    }[act.action_type]
    allowed = set(need) | ({"location", "reference_object"} if act.action_type == "POINT" else set())

    present = {
        name
        for name in ("location", "facing", "reference_object")
        if getattr(act, name) is not None
    }
    for name in sorted(present - allowed):
        out.append(Violation(f"{path}.{name}", f"not allowed for {act.action_type}"))
    for name in sorted(need - present):
        out.append(Violation(f"{path}.{name}", f"required for {act.action_type}"))
    if act.action_type == "POINT" and len(present & {"location", "reference_object"}) != 1:
        out.append(Violation(path, "POINT takes exactly one of location / reference_object"))

    if act.location is not None:
        _validate_location(act.location, f"{path}.location", out)
    if act.facing is not None:
        set_fields = [n for n in ("relative_yaw", "location") if getattr(act.facing, n) is not None]
        if len(set_fields) != 1:
            out.append(Violation(f"{path}.facing", "exactly one of relative_yaw / location"))
        if act.facing.location is not None:
            _validate_location(act.facing.location, f"{path}.facing.location", out)
    if act.reference_object is not None:
        _validate_refobj(act.reference_object, f"{path}.reference_object", out)
    if act.repeat is not None:
        if act.repeat.kind not in CONDITION_KINDS:
            out.append(Violation(f"{path}.repeat.kind", f"unknown condition kind {act.repeat.kind!r}"))
        elif act.repeat.kind == "repeat_n":
            if act.repeat.n is None or act.repeat.n < 1:
                out.append(Violation(f"{path}.repeat.n", "repeat_n requires n >= 1"))
        elif act.repeat.n is not None:
            out.append(Violation(f"{path}.repeat.n", "n only allowed for repeat_n"))


def _validate_location(loc: LocationSpec, path: str, out: list[Violation]):
    set_fields = [
        n for n in ("reference_object", "absolute", "relative") if getattr(loc, n) is not None
    ]
    if len(set_fields) != 1:
        out.append(Violation(path, "exactly one of reference_object / absolute / relative"))
    if loc.reference_object is not None:
        _validate_refobj(loc.reference_object, f"{path}.reference_object", out)
    if loc.relative is not None:
        direction, _dist = loc.relative
        if direction not in DIRECTIONS:
            out.append(Violation(f"{path}.relative", f"unknown direction {direction!r}"))


def _validate_refobj(spec: ReferenceObjectSpec, path: str, out: list[Violation]):
    _validate_filters(spec.filters, f"{path}.filters", out)
    if spec.text_span is not None:
        if spec.text_span.start < 0 or spec.text_span.start >= spec.text_span.end:
            out.append(Violation(f"{path}.text_span", "requires 0 <= start < end"))


def _validate_filters(f: Filters, path: str, out: list[Violation]):
    if not f.tags and f.node_type is None and f.within is None:
        out.append(Violation(path, "at least one constraint required"))
    for pred, value in f.tags:
        if not pred or pred in RESERVED_FILTER_KEYS:
            out.append(Violation(f"{path}.{pred}", "bad predicate"))
        if not isinstance(value, str) or not value:
            out.append(Violation(f"{path}.{pred}", "tag value must be a non-empty string"))
    if f.node_type is not None and not f.node_type:
        out.append(Violation(f"{path}.node_type", "must be non-empty"))
    if f.within is not None and f.within[2] < 0:
        out.append(Violation(f"{path}.within", "distance must be >= 0"))
    if f.selector is not None and f.selector[0] not in SELECTOR_KINDS:
        out.append(Violation(f"{path}.selector", f"unknown selector kind {f.selector[0]!r}"))
    if f.limit is not None and f.limit < 1:
        out.append(Violation(f"{path}.limit", "limit must be >= 1"))


# ---------------------------------------------------------------------------
# Canonical text form


def filters_to_obj(f: Filters) -> dict:
    obj: dict = {}
    by_pred: dict[str, list[str]] = {}
    for pred, value in f.tags:
        by_pred.setdefault(pred, []).append(value)
    for pred, values in by_pred.items():
        obj[pred] = values[0] if len(values) == 1 else sorted(values)
    if f.node_type is not None:
        obj["node_type"] = f.node_type
    if f.within is not None:
        x, y, dist = f.within
        obj["within"] = {"distance": float(dist), "point": [float(x), float(y)]}
    if f.selector is not None:
        kind, x, y = f.selector
        obj["selector"] = {"kind": kind, "point": [float(x), float(y)]}
    if f.limit is not None:
        obj["limit"] = int(f.limit)
    return obj


def filters_from_obj(obj, path="filters") -> Filters:
    if not isinstance(obj, dict):
        raise CanonicalParseError(f"{path} must be an object")
    tags: list[tuple[str, str]] = []
    node_type = within = selector = limit = None
    for key, value in obj.items():
        if key == "node_type":
            node_type = _expect(value, str, f"{path}.node_type")
        elif key == "within":
            d = _expect(value, dict, f"{path}.within")
            within = (*_point(d.get("point"), f"{path}.within.point"),
                      _number(d.get("distance"), f"{path}.within.distance"))
            _no_extra_keys(d, {"point", "distance"}, f"{path}.within")
        elif key == "selector":
            d = _expect(value, dict, f"{path}.selector")
            selector = (_expect(d.get("kind"), str, f"{path}.selector.kind"),
                        *_point(d.get("point"), f"{path}.selector.point"))
            _no_extra_keys(d, {"kind", "point"}, f"{path}.selector")
        elif key == "limit":
            if not isinstance(value, int) or isinstance(value, bool):
                raise CanonicalParseError(f"{path}.limit must be an integer")
            limit = value
        elif isinstance(value, list):
            tags.extend((key, _expect(v, str, f"{path}.{key}[]")) for v in value)
        else:
            tags.append((key, _expect(value, str, f"{path}.{key}")))
    return Filters(tags=tuple(tags), node_type=node_type, within=within,
                   selector=selector, limit=limit)


def _expect(value, typ, path):
    if not isinstance(value, typ):
        raise CanonicalParseError(f"{path} must be {typ.__name__}")
    return value


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CanonicalParseError(f"{path} must be a number")
    return float(value)


def _point(value, path) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise CanonicalParseError(f"{path} must be [x, y]")
    return (_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


def _no_extra_keys(d: dict, allowed: set, path: str):
    extra = sorted(set(d) - allowed)
    if extra:
        raise CanonicalParseError(f"{path}: unknown key {extra[0]!r}")


def _refobj_to_obj(spec: ReferenceObjectSpec) -> dict:
    obj: dict = {"filters": filters_to_obj(spec.filters)}
    if spec.text_span is not None:
        obj["text_span"] = [spec.text_span.start, spec.text_span.end]
    return obj


def _refobj_from_obj(obj, path) -> ReferenceObjectSpec:
    d = _expect(obj, dict, path)
    _no_extra_keys(d, {"filters", "text_span"}, path)
    if "filters" not in d:
        raise CanonicalParseError(f"{path}.filters is required")
    span = None
    if "text_span" in d:
        raw = d["text_span"]
        if (not isinstance(raw, list) or len(raw) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in raw)):
            raise CanonicalParseError(f"{path}.text_span must be [start, end]")
        span = Span(raw[0], raw[1])
    return ReferenceObjectSpec(filters=filters_from_obj(d["filters"], f"{path}.filters"),
                               text_span=span)


def _location_to_obj(loc: LocationSpec) -> dict:
    if loc.reference_object is not None:
        return {"reference_object": _refobj_to_obj(loc.reference_object)}
    if loc.absolute is not None:
        return {"absolute": [float(loc.absolute[0]), float(loc.absolute[1])]}
    direction, dist = loc.relative
    return {"relative": {"direction": direction, "distance": float(dist)}}


def _location_from_obj(obj, path) -> LocationSpec:
    d = _expect(obj, dict, path)
    _no_extra_keys(d, {"reference_object", "absolute", "relative"}, path)
    refobj = absolute = relative = None
    if "reference_object" in d:
        refobj = _refobj_from_obj(d["reference_object"], f"{path}.reference_object")
    if "absolute" in d:
        absolute = _point(d["absolute"], f"{path}.absolute")
    if "relative" in d:
        rel = _expect(d["relative"], dict, f"{path}.relative")
        _no_extra_keys(rel, {"direction", "distance"}, f"{path}.relative")
        relative = (_expect(rel.get("direction"), str, f"{path}.relative.direction"),
                    _number(rel.get("distance"), f"{path}.relative.distance"))
    return LocationSpec(reference_object=refobj, absolute=absolute, relative=relative)


def _action_to_obj(act: ActionSpec) -> dict:
    obj: dict = {"action_type": act.action_type}
    if act.location is not None:
        obj["location"] = _location_to_obj(act.location)
    if act.facing is not None:
        if act.facing.relative_yaw is not None:
            obj["facing"] = {"relative_yaw": float(act.facing.relative_yaw)}
        else:
            obj["facing"] = {"location": _location_to_obj(act.facing.location)}
    if act.reference_object is not None:
        obj["reference_object"] = _refobj_to_obj(act.reference_object)
    if act.repeat is not None:
        rep: dict = {"kind": act.repeat.kind}
        if act.repeat.n is not None:
            rep["n"] = int(act.repeat.n)
        obj["repeat"] = rep
    return obj


def _action_from_obj(obj, path) -> ActionSpec:
    d = _expect(obj, dict, path)
    _no_extra_keys(d, {"action_type", "location", "facing", "reference_object", "repeat"}, path)
    action_type = _expect(d.get("action_type"), str, f"{path}.action_type")
    location = facing = refobj = repeat = None
    if "location" in d:
        location = _location_from_obj(d["location"], f"{path}.location")
    if "facing" in d:
        f = _expect(d["facing"], dict, f"{path}.facing")
        _no_extra_keys(f, {"relative_yaw", "location"}, f"{path}.facing")
        facing = Facing(
            relative_yaw=_number(f["relative_yaw"], f"{path}.facing.relative_yaw")
            if "relative_yaw" in f else None,
            location=_location_from_obj(f["location"], f"{path}.facing.location")
            if "location" in f else None,
        )
    if "reference_object" in d:
        refobj = _refobj_from_obj(d["reference_object"], f"{path}.reference_object")
    if "repeat" in d:
        r = _expect(d["repeat"], dict, f"{path}.repeat")
        _no_extra_keys(r, {"kind", "n"}, f"{path}.repeat")
        n = r.get("n")
        if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
            raise CanonicalParseError(f"{path}.repeat.n must be an integer")
        repeat = Condition(kind=_expect(r.get("kind"), str, f"{path}.repeat.kind"), n=n)
    return ActionSpec(action_type=action_type, location=location, facing=facing,
                      reference_object=refobj, repeat=repeat)


def lf_to_obj(lf: LogicalForm) -> dict:
    obj: dict = {"dialogue_type": lf.dialogue_type}
    if lf.action_sequence is not None:
        obj["action_sequence"] = [_action_to_obj(a) for a in lf.action_sequence]
    if lf.filters is not None:
        obj["filters"] = filters_to_obj(lf.filters)
    if lf.upsert is not None:
        obj["upsert"] = {"predicate": lf.upsert.predicate, "value": lf.upsert.value}
    return obj


def lf_from_obj(obj) -> LogicalForm:
    d = _expect(obj, dict, "logical form")
    _no_extra_keys(d, {"dialogue_type", "action_sequence", "filters", "upsert"}, "logical form")
    dialogue_type = _expect(d.get("dialogue_type"), str, "dialogue_type")
    actions = None
    if "action_sequence" in d:
        seq = _expect(d["action_sequence"], list, "action_sequence")
        actions = tuple(_action_from_obj(a, f"action_sequence[{i}]") for i, a in enumerate(seq))
    filters = filters_from_obj(d["filters"]) if "filters" in d else None
    upsert = None
    if "upsert" in d:
        u = _expect(d["upsert"], dict, "upsert")
        _no_extra_keys(u, {"predicate", "value"}, "upsert")
        upsert = Upsert(predicate=_expect(u.get("predicate"), str, "upsert.predicate"),
                        value=_expect(u.get("value"), str, "upsert.value"))
    return LogicalForm(dialogue_type=dialogue_type, action_sequence=actions,
                       filters=filters, upsert=upsert)


def to_canonical(lf: LogicalForm) -> str:
    return json.dumps(lf_to_obj(lf), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def from_canonical(text: str) -> LogicalForm:
    """Parse document text into a LogicalForm; raises CanonicalParseError."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise CanonicalParseError(f"bad document: {e.msg}", e.pos) from e
    return lf_from_obj(obj)
