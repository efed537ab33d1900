"""Template-grammar semantic parser: controlled English to logical forms.

Each template pairs a token pattern (literals plus typed slots) with a
logical-form skeleton whose "$name" placeholders are filled from the matched
slots. Parsing is a pure function of (utterance, template table); an
utterance no template matches parses to NOOP, never an error. The shipped
table lives in data/templates.txt and can be extended at runtime or by
editing the file (format documented there).
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources

from . import dsl

SLOT_TYPES = frozenset({"OBJ_PHRASE", "NUMBER", "DIRECTION", "COORD", "WORD"})

ARTICLES = frozenset({"the", "a", "an"})
COLOR_TERMS = frozenset({
    "black", "blue", "brown", "gray", "green", "orange",
    "pink", "purple", "red", "white", "yellow",
})

_NUMBER_RE = re.compile(r"^-?\d+(\.\d+)?$")
_TERMINAL_PUNCT_RE = re.compile(r"[.!?,;:]+$")


class TemplateError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase, strip terminal punctuation, split on whitespace."""
    text = _TERMINAL_PUNCT_RE.sub("", text.lower().strip())
    return text.split()


@dataclass(frozen=True)
class Slot:
    name: str
    slot_type: str


@dataclass(frozen=True)
class Template:
    template_id: int
    priority: int
    pattern: tuple[object, ...]  # str literals and Slot entries
    skeleton: dict


@dataclass(frozen=True)
class ParseResult:
    lf: dsl.LogicalForm
    bindings: dict[str, dsl.Span]
    matched_template: int | None


def _parse_pattern(pattern_text: str) -> tuple[object, ...]:
    out: list[object] = []
    for tok in pattern_text.split():
        if tok.startswith("$"):
            name, sep, slot_type = tok[1:].partition(":")
            if not sep or not name or slot_type not in SLOT_TYPES:
                raise TemplateError(f"bad slot token {tok!r}")
            out.append(Slot(name=name, slot_type=slot_type))
        else:
            out.append(tok.lower())
    if not out:
        raise TemplateError("empty pattern")
    return tuple(out)


def _placeholders(obj) -> set[str]:
    if isinstance(obj, str) and obj.startswith("$"):
        return {obj[1:]}
    if isinstance(obj, dict):
        return set().union(*(_placeholders(v) for v in obj.values()), set())
    if isinstance(obj, list):
        return set().union(*(_placeholders(v) for v in obj), set())
    return set()


def _substitute(obj, values: dict[str, object]):
    if isinstance(obj, str) and obj.startswith("$"):
        return copy.deepcopy(values[obj[1:]])
    if isinstance(obj, dict):
        return {k: _substitute(v, values) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_substitute(v, values) for v in obj]
    return obj


def obj_phrase_filters(tokens: list[str]) -> dict:
    """Noun-phrase tokens -> filters document: has_tag from the head noun,
    has_colour when a known color term precedes it."""
    words = [t for t in tokens if t not in ARTICLES]
    if not words:
        words = list(tokens)
    head = words[-1]
    filters = {"has_tag": head}
    colors = [w for w in words[:-1] if w in COLOR_TERMS]
    if colors:
        filters["has_colour"] = colors[-1]
    return filters


_DUMMY_SLOT_VALUES = {
    "OBJ_PHRASE": {"filters": {"has_tag": "thing"}},
    "NUMBER": 1.0,
    "DIRECTION": "left",
    "COORD": [0.0, 0.0],
    "WORD": "thing",
}


class Parser:
    """Holds the template table; read-mostly, extended via add_template."""

    def __init__(self, template_text: str | None = None):
        self._templates: list[Template] = []
        if template_text is None:
            template_text = (
                resources.files("deskbot").joinpath("data/templates.txt").read_text()
            )
        for lineno, line in enumerate(template_text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TemplateError(f"templates line {lineno}: need 3 tab-separated fields")
            try:
                self.add_template(int(fields[0]), fields[1], fields[2])
            except (TemplateError, ValueError) as e:
                raise TemplateError(f"templates line {lineno}: {e}") from e

    def add_template(self, priority: int, pattern_text: str, skeleton_text: str) -> int:
        """Register a template; returns its id. Rejects skeletons with
        placeholders no pattern slot binds, or that cannot yield a valid LF."""
        pattern = _parse_pattern(pattern_text)
        try:
            skeleton = json.loads(skeleton_text)
        except json.JSONDecodeError as e:
            raise TemplateError(f"bad skeleton document: {e}") from e

        slot_names = {p.name for p in pattern if isinstance(p, Slot)}
        unbound = _placeholders(skeleton) - slot_names
        if unbound:
            raise TemplateError(f"skeleton placeholder ${sorted(unbound)[0]} not bound by pattern")

        dummy = {p.name: _DUMMY_SLOT_VALUES[p.slot_type]
                 for p in pattern if isinstance(p, Slot)}
        lf = dsl.lf_from_obj(_substitute(skeleton, dummy))
        violations = dsl.validate(lf)
        if violations:
            raise TemplateError(f"skeleton never yields a valid logical form: {violations[0]}")

        template = Template(template_id=len(self._templates), priority=priority,
                            pattern=pattern, skeleton=skeleton)
        self._templates.append(template)
        return template.template_id

    def parse(self, text: str) -> ParseResult:
        tokens = tokenize(text)
        for template in sorted(self._templates, key=lambda t: (-t.priority, t.template_id)):
            match = _match(template.pattern, tokens)
            if match is None:
                continue
            values: dict[str, object] = {}
            bindings: dict[str, dsl.Span] = {}
            for slot, (start, end) in match.items():
                bindings[slot.name] = dsl.Span(start, end)
                values[slot.name] = _expand(slot, tokens[start:end])
            try:
                lf = dsl.lf_from_obj(_substitute(template.skeleton, values))
            except dsl.CanonicalParseError:
                continue
            if dsl.validate(lf):
                continue
            return ParseResult(lf=lf, bindings=bindings,
                               matched_template=template.template_id)
        return ParseResult(lf=dsl.NOOP, bindings={}, matched_template=None)


def _expand(slot: Slot, tokens: list[str]):
    if slot.slot_type == "OBJ_PHRASE":
        return {"filters": obj_phrase_filters(tokens)}
    if slot.slot_type == "NUMBER":
        return float(tokens[0])
    if slot.slot_type == "COORD":
        return [float(tokens[0]), float(tokens[1])]
    return tokens[0]  # DIRECTION, WORD


def _match(pattern: tuple[object, ...], tokens: list[str],
           i: int = 0, j: int = 0) -> dict[Slot, tuple[int, int]] | None:
    """Anchored match of pattern against tokens[j:]; returns slot spans."""
    if i == len(pattern):
        return {} if j == len(tokens) else None
    part = pattern[i]
    if isinstance(part, str):
        if j < len(tokens) and tokens[j] == part:
            return _match(pattern, tokens, i + 1, j + 1)
        return None

    if part.slot_type == "OBJ_PHRASE":
        # greedy: prefer the longest phrase
        for end in range(len(tokens), j, -1):
            rest = _match(pattern, tokens, i + 1, end)
            if rest is not None:
                return {part: (j, end), **rest}
        return None
    if part.slot_type == "COORD":
        if (j + 1 < len(tokens) and _NUMBER_RE.match(tokens[j])
                and _NUMBER_RE.match(tokens[j + 1])):
            rest = _match(pattern, tokens, i + 1, j + 2)
            if rest is not None:
                return {part: (j, j + 2), **rest}
        return None

    if j >= len(tokens):
        return None
    ok = {
        "NUMBER": lambda t: bool(_NUMBER_RE.match(t)),
        "DIRECTION": lambda t: t in dsl.DIRECTIONS,
        "WORD": lambda t: True,
    }[part.slot_type](tokens[j])
    if not ok:
        return None
    rest = _match(pattern, tokens, i + 1, j + 1)
    if rest is None:
        return None
    return {part: (j, j + 1), **rest}
