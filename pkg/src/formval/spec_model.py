"""Measurement-model specification: parsing, validation and construct classification.

Spec files are YAML documents::

    spec_version: 1
    title: Example instrument
    constructs:
      - id: usability
        name: Perceived usability
        model: formative            # formative | reflective
        weight_source: cvr          # cvr | researcher_rating | manual
        items:
          - id: US1
            prompt: The app is easy to navigate.
            scale: [1, 5]
            source_kind: definitional   # definitional | mirror
            citation: Doe 2020
            reverse: false              # optional, remaps v -> min + max - v
      - id: quality
        name: Overall quality
        model: formative
        weight_source: manual
        manual_weights: [2, 1, 1]
        children: [usability, reliability, support]

A higher-order construct lists ``children`` (construct ids) instead of ``items``.
A first-order construct may alternatively name its ``parent``; both forms are
materialized into the same links.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .errors import SpecReferenceError, SpecSyntaxError
from .findings import Code, Finding, Severity

SPEC_VERSION = 1

MODELS = ("formative", "reflective")
WEIGHT_SOURCES = ("cvr", "researcher_rating", "manual")
SOURCE_KINDS = ("definitional", "mirror")


@dataclass(frozen=True)
class ItemSpec:
    item_id: str
    prompt: str = ""
    scale_min: int = 1
    scale_max: int = 5
    source_kind: str = "definitional"
    citation: str = ""
    reverse: bool = False


@dataclass(frozen=True)
class ConstructSpec:
    construct_id: str
    name: str = ""
    model: str = "formative"
    items: tuple[ItemSpec, ...] = ()
    children: tuple[str, ...] = ()
    weight_source: str = "cvr"
    manual_weights: tuple[float, ...] | None = None
    parent: str | None = None

    @property
    def is_higher_order(self) -> bool:
        return bool(self.children)

    @property
    def indicator_ids(self) -> tuple[str, ...]:
        """Item ids for first-order constructs, child construct ids otherwise."""
        if self.children:
            return self.children
        return tuple(it.item_id for it in self.items)


@dataclass(frozen=True)
class MeasurementSpec:
    constructs: tuple[ConstructSpec, ...]
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {c.construct_id: c for c in self.constructs})
        object.__setattr__(
            self, "_items", {it.item_id: it for c in self.constructs for it in c.items}
        )

    def __eq__(self, other):
        if not isinstance(other, MeasurementSpec):
            return NotImplemented
        return self.title == other.title and self.constructs == other.constructs

    def __hash__(self):
        return hash((self.title, self.constructs))

    def construct(self, construct_id: str) -> ConstructSpec:
        try:
            return self._by_id[construct_id]
        except KeyError:
            raise KeyError(f"unknown construct {construct_id!r}") from None

    def item(self, item_id: str) -> ItemSpec:
        try:
            return self._items[item_id]
        except KeyError:
            raise KeyError(f"unknown item {item_id!r}") from None

    def has_item(self, item_id: str) -> bool:
        return item_id in self._items

    def has_construct(self, construct_id: str) -> bool:
        return construct_id in self._by_id

    @property
    def items(self) -> tuple[ItemSpec, ...]:
        return tuple(self._items.values())

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(self._items)

    @property
    def construct_ids(self) -> tuple[str, ...]:
        return tuple(self._by_id)

    def parents_of(self, construct_id: str) -> list[str]:
        return [c.construct_id for c in self.constructs if construct_id in c.children]

    def construct_of_item(self, item_id: str) -> ConstructSpec:
        for c in self.constructs:
            if any(it.item_id == item_id for it in c.items):
                return c
        raise KeyError(f"unknown item {item_id!r}")

    def bounds(self, indicator_id: str) -> tuple[float, float]:
        """Scale bounds of an item, or the envelope of a construct's indicators."""
        if indicator_id in self._items:
            it = self._items[indicator_id]
            return float(it.scale_min), float(it.scale_max)
        seen: set[str] = set()

        def walk(cid):
            if cid in seen:
                return []
            seen.add(cid)
            c = self.construct(cid)
            out = [(float(it.scale_min), float(it.scale_max)) for it in c.items]
            for child in c.children:
                out.extend(walk(child))
            return out

        spans = walk(indicator_id)
        if not spans:
            raise KeyError(f"no items under {indicator_id!r}")
        return min(s[0] for s in spans), max(s[1] for s in spans)

    def level(self, construct_id: str) -> int:
        """1 for first-order constructs, 1 + max child level otherwise."""
        seen: set[str] = set()

        def walk(cid):
            if cid in seen:
                raise SpecReferenceError(f"hierarchy cycle through {cid!r}")
            seen.add(cid)
            c = self.construct(cid)
            lvl = 1 + max((walk(ch) for ch in c.children), default=0)
            seen.discard(cid)
            return lvl

        return walk(construct_id)

    @property
    def depth(self) -> int:
        return max((self.level(c.construct_id) for c in self.constructs), default=0)

    def evaluation_order(self) -> list[str]:
        """Construct ids ordered children-first, ties broken by file order."""
        return sorted(self.construct_ids,
                      key=lambda cid: (self.level(cid), self.construct_ids.index(cid)))


# --- parsing -------------------------------------------------------------------

def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise SpecSyntaxError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _string(value, where: str) -> str:
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        raise SpecSyntaxError(f"{where}: expected a string")
    return str(value)


def _choice(value, choices, where: str) -> str:
    if value not in choices:
        raise SpecSyntaxError(f"{where}: {value!r} is not one of {', '.join(choices)}")
    return value


def _parse_item(raw, where: str) -> ItemSpec:
    if not isinstance(raw, Mapping):
        raise SpecSyntaxError(f"{where}: item must be a mapping")
    item_id = _string(_require(raw, "id", where), where + ".id")
    if not item_id:
        raise SpecSyntaxError(f"{where}: empty item id")
    scale = raw.get("scale", [1, 5])
    if (not isinstance(scale, (list, tuple)) or len(scale) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in scale)):
        raise SpecSyntaxError(f"{where}: scale must be a pair of integers")
    reverse = raw.get("reverse", False)
    if not isinstance(reverse, bool):
        raise SpecSyntaxError(f"{where}: reverse must be a boolean")
    unknown = set(raw) - {"id", "prompt", "scale", "source_kind", "citation", "reverse"}
    if unknown:
        raise SpecSyntaxError(f"{where}: unknown keys {sorted(unknown)}")
    return ItemSpec(
        item_id=item_id,
        prompt=_string(raw.get("prompt"), where + ".prompt"),
        scale_min=scale[0],
        scale_max=scale[1],
        source_kind=_choice(raw.get("source_kind", "definitional"), SOURCE_KINDS,
                            where + ".source_kind"),
        citation=_string(raw.get("citation"), where + ".citation"),
        reverse=reverse,
    )


_CONSTRUCT_KEYS = {"id", "name", "model", "items", "children", "weight_source",
                   "manual_weights", "parent"}


def _parse_construct(raw, where: str) -> tuple[dict, list[ItemSpec]]:
    if not isinstance(raw, Mapping):
        raise SpecSyntaxError(f"{where}: construct must be a mapping")
    unknown = set(raw) - _CONSTRUCT_KEYS
    if unknown:
        raise SpecSyntaxError(f"{where}: unknown keys {sorted(unknown)}")
    cid = _string(_require(raw, "id", where), where + ".id")
    if not cid:
        raise SpecSyntaxError(f"{where}: empty construct id")
    where = f"construct {cid!r}"
    raw_items = raw.get("items") or []
    raw_children = raw.get("children") or []
    if not isinstance(raw_items, list) or not isinstance(raw_children, list):
        raise SpecSyntaxError(f"{where}: items and children must be lists")
    items = [_parse_item(r, f"{where} item #{i + 1}") for i, r in enumerate(raw_items)]
    weights = raw.get("manual_weights")
    if weights is not None:
        if not isinstance(weights, list) or not all(
                isinstance(w, (int, float)) and not isinstance(w, bool) for w in weights):
            raise SpecSyntaxError(f"{where}: manual_weights must be a list of numbers")
        weights = tuple(float(w) for w in weights)
    parent = raw.get("parent")
    fields_ = dict(
        construct_id=cid,
        name=_string(raw.get("name"), where + ".name"),
        model=_choice(_require(raw, "model", where), MODELS, where + ".model"),
        children=[_string(c, where + ".children") for c in raw_children],
        weight_source=_choice(raw.get("weight_source", "cvr"), WEIGHT_SOURCES,
                              where + ".weight_source"),
        manual_weights=weights,
        parent=None if parent is None else _string(parent, where + ".parent"),
    )
    return fields_, items


def spec_from_dict(doc: Any) -> MeasurementSpec:
    if not isinstance(doc, Mapping):
        raise SpecSyntaxError("spec document must be a mapping")
    version = doc.get("spec_version", SPEC_VERSION)
    if version != SPEC_VERSION:
        raise SpecSyntaxError(f"unsupported spec_version {version!r}")
    unknown = set(doc) - {"spec_version", "title", "constructs"}
    if unknown:
        raise SpecSyntaxError(f"unknown top-level keys {sorted(unknown)}")
    raw_constructs = _require(doc, "constructs", "spec")
    if not isinstance(raw_constructs, list) or not raw_constructs:
        raise SpecSyntaxError("constructs must be a non-empty list")

    parsed = [_parse_construct(r, f"construct #{i + 1}") for i, r in enumerate(raw_constructs)]

    ids: set[str] = set()
    for fields_, items in parsed:
        for ident in [fields_["construct_id"]] + [it.item_id for it in items]:
            if ident in ids:
                raise SpecReferenceError(f"duplicate identifier {ident!r}")
            ids.add(ident)
    construct_ids = [f["construct_id"] for f, _ in parsed]
    known = set(construct_ids)
    children = {f["construct_id"]: list(f["children"]) for f, _ in parsed}
    for fields_, _ in parsed:
        cid = fields_["construct_id"]
        for child in fields_["children"]:
            if child not in known:
                raise SpecReferenceError(f"construct {cid!r}: unknown child {child!r}")
        parent = fields_["parent"]
        if parent is not None:
            if parent not in known:
                raise SpecReferenceError(f"construct {cid!r}: unknown parent {parent!r}")
            if cid not in children[parent]:
                children[parent].append(cid)

    first_parent: dict[str, str] = {}
    for cid in construct_ids:
        for child in children[cid]:
            first_parent.setdefault(child, cid)

    constructs = []
    for fields_, items in parsed:
        cid = fields_["construct_id"]
        constructs.append(ConstructSpec(
            construct_id=cid,
            name=fields_["name"],
            model=fields_["model"],
            items=tuple(items),
            children=tuple(children[cid]),
            weight_source=fields_["weight_source"],
            manual_weights=fields_["manual_weights"],
            parent=first_parent.get(cid),
        ))
    return MeasurementSpec(constructs=tuple(constructs), title=_string(doc.get("title"), "title"))


def parse_spec(text: str) -> MeasurementSpec:
    """Parse a YAML spec document into a resolved :class:`MeasurementSpec`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecSyntaxError(f"malformed spec document: {exc}") from exc
    return spec_from_dict(doc)


def load_spec(path: str | Path) -> MeasurementSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def spec_to_dict(spec: MeasurementSpec) -> dict:
    constructs = []
    for c in spec.constructs:
        entry: dict[str, Any] = {"id": c.construct_id, "name": c.name, "model": c.model,
                                 "weight_source": c.weight_source}
        if c.manual_weights is not None:
            entry["manual_weights"] = list(c.manual_weights)
        if c.items:
            entry["items"] = [
                {"id": it.item_id, "prompt": it.prompt, "scale": [it.scale_min, it.scale_max],
                 "source_kind": it.source_kind, "citation": it.citation, "reverse": it.reverse}
                for it in c.items
            ]
        if c.children:
            entry["children"] = list(c.children)
        constructs.append(entry)
    return {"spec_version": SPEC_VERSION, "title": spec.title, "constructs": constructs}


def serialize_spec(spec: MeasurementSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False, allow_unicode=True,
                          default_flow_style=None, width=100)


def spec_hash(spec: MeasurementSpec) -> str:
    return hashlib.sha256(serialize_spec(spec).encode("utf-8")).hexdigest()


# --- validation ----------------------------------------------------------------

def _spec_finding(code, severity, message, construct_id=None, item_ids=()):
    return Finding(code, severity, message, tuple(item_ids), construct_id, "specification")


def validate_spec(spec: MeasurementSpec, item_floor: int = 5) -> list[Finding]:
    """Check spec invariants and the pilot-design heuristics.

    Invariant violations come back as ERROR findings, heuristics as WARNING.
    Nothing is raised; callers decide whether to halt.
    """
    out: list[Finding] = []
    for c in spec.constructs:
        cid = c.construct_id
        if c.items and c.children:
            out.append(_spec_finding(Code.ITEMS_AND_CHILDREN, Severity.ERROR,
                                     "construct references both items and child constructs",
                                     cid))
        if not c.items and not c.children:
            out.append(_spec_finding(Code.EMPTY_CONSTRUCT, Severity.ERROR,
                                     "construct has no items and no child constructs", cid))
        for it in c.items:
            if not it.scale_min < it.scale_max:
                out.append(_spec_finding(Code.BAD_SCALE, Severity.ERROR,
                                         f"scale_min {it.scale_min} must be below "
                                         f"scale_max {it.scale_max}", cid, [it.item_id]))
        parents = spec.parents_of(cid)
        if len(parents) > 1:
            out.append(_spec_finding(Code.MULTIPLE_PARENTS, Severity.ERROR,
                                     f"construct has {len(parents)} parents: "
                                     f"{', '.join(parents)}", cid))
        n_ind = len(c.indicator_ids)
        if c.weight_source == "manual":
            w = c.manual_weights
            if w is None:
                out.append(_spec_finding(Code.BAD_MANUAL_WEIGHTS, Severity.ERROR,
                                         "weight_source is manual but manual_weights is absent",
                                         cid))
            else:
                if len(w) != n_ind:
                    out.append(_spec_finding(Code.BAD_MANUAL_WEIGHTS, Severity.ERROR,
                                             f"{len(w)} manual weights for {n_ind} indicators",
                                             cid))
                if any(x < 0 for x in w):
                    out.append(_spec_finding(Code.BAD_MANUAL_WEIGHTS, Severity.ERROR,
                                             "manual weights must be non-negative", cid))
                elif w and all(x == 0 for x in w):
                    out.append(_spec_finding(Code.BAD_MANUAL_WEIGHTS, Severity.ERROR,
                                             "manual weights are all zero", cid))

        if c.items and len(c.items) < item_floor:
            out.append(_spec_finding(Code.ITEM_FLOOR, Severity.WARNING,
                                     f"{len(c.items)} items, below item floor {item_floor}", cid))
        missing = [it.item_id for it in c.items if not it.citation.strip()]
        if missing:
            out.append(_spec_finding(Code.MISSING_CITATION, Severity.WARNING,
                                     "items without a citation", cid, missing))
        cited = {it.citation.strip() for it in c.items if it.citation.strip()}
        if (c.model == "formative" and len(c.items) > 1 and len(cited) == 1
                and not missing):
            out.append(_spec_finding(Code.SINGLE_SOURCE, Severity.WARNING,
                                     "all items cite a single source", cid))

    for cycle in _cycles(spec):
        out.append(_spec_finding(Code.HIERARCHY_CYCLE, Severity.ERROR,
                                 "hierarchy cycle: " + " -> ".join(cycle + [cycle[0]]),
                                 cycle[0]))
    return out


def _cycles(spec: MeasurementSpec) -> list[list[str]]:
    """Each elementary cycle once, reported from its first construct in file order."""
    order = {cid: i for i, cid in enumerate(spec.construct_ids)}
    found: list[list[str]] = []
    seen_keys: set[frozenset] = set()
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(cid):
        state[cid] = 1
        stack.append(cid)
        for child in spec.construct(cid).children:
            if state.get(child) == 1:
                cycle = stack[stack.index(child):]
                key = frozenset(cycle)
                if key not in seen_keys:
                    seen_keys.add(key)
                    start = min(range(len(cycle)), key=lambda i: order[cycle[i]])
                    found.append(cycle[start:] + cycle[:start])
            elif state.get(child) is None:
                visit(child)
        stack.pop()
        state[cid] = 2

    for cid in spec.construct_ids:
        if cid not in state:
            visit(cid)
    return found


# --- classification guide ------------------------------------------------------

class Recommendation(str, Enum):
    FORMATIVE = "formative"
    REFLECTIVE = "reflective"
    FOLLOW_DEFINITION = "follow_definition"


CAUSALITY = ("construct_causes_items", "items_cause_construct", "ambiguous")
TRISTATE = ("yes", "no", "unsure")


@dataclass(frozen=True)
class ClassificationAnswers:
    causality: str
    items_interchangeable: str
    covariation_necessary: str

    def __post_init__(self):
        if self.causality not in CAUSALITY:
            raise ValueError(f"causality must be one of {CAUSALITY}")
        for name in ("items_interchangeable", "covariation_necessary"):
            if getattr(self, name) not in TRISTATE:
                raise ValueError(f"{name} must be one of {TRISTATE}")


def classify_construct(answers: ClassificationAnswers) -> Recommendation:
    """Recommend a measurement model from the decision-guide answers.

    Causal direction decides first; interchangeability only when causality is
    ambiguous; necessity of covariation only when both are inconclusive.
    """
    if answers.causality == "items_cause_construct":
        return Recommendation.FORMATIVE
    if answers.causality == "construct_causes_items":
        return Recommendation.REFLECTIVE
    if answers.items_interchangeable == "no":
        return Recommendation.FORMATIVE
    if answers.items_interchangeable == "yes":
        return Recommendation.REFLECTIVE
    if answers.covariation_necessary == "yes":
        return Recommendation.REFLECTIVE
    if answers.covariation_necessary == "no":
        return Recommendation.FORMATIVE
    return Recommendation.FOLLOW_DEFINITION


def iter_first_order(spec: MeasurementSpec) -> Iterable[ConstructSpec]:
    return (c for c in spec.constructs if not c.children)
