"""Knowledge base for structural analysis.

Two rewritable artifacts: the position table (per symbol class, which
relative positions around it are forbidden / allowed / required, i.e.
coefficients 0 / 1 / 1.5) and the heuristic reconstruction rules
(multi-stroke symbol assembly and context label rewrites). Both are
plain data, serialized by `store`, and may carry per-user overlays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class RelPosition(enum.Enum):
    # enum order is the documented placement tie-break order
    LEFT = "left"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"
    SUPERSCRIPT = "superscript"
    SUBSCRIPT = "subscript"
    UPPER_LEFT = "upper_left"
    LOWER_LEFT = "lower_left"
    INSIDE = "inside"


POSITION_ORDER = {pos: i for i, pos in enumerate(RelPosition)}

FORBIDDEN = 0.0
ALLOWED = 1.0
REQUIRED = 1.5
COEFFICIENTS = (FORBIDDEN, ALLOWED, REQUIRED)


class KnowledgeError(ValueError):
    """Invalid table or rule data."""


@dataclass(frozen=True)
class TableGeometry:
    """Parameters of the position-region construction around an anchor."""

    reach: float = 1.0  # region extent as a multiple of anchor size
    script_band: float = 0.5  # fraction of half-height separating Right from scripts
    inset: float = 0.08  # Inside region shrink factor
    epsilon_box: float = 0.02  # degenerate-box inflation, fraction of scene diagonal
    script_ratio: float = 0.9  # max script height relative to its base
    script_min_overlap: float = 40.0  # min P inside a script region to attach


@dataclass
class PositionTable:
    """RelPosition -> coefficient per anchor class, with a default row."""

    default_row: dict[RelPosition, float]
    classes: dict[str, dict[RelPosition, float]] = field(default_factory=dict)
    geometry: TableGeometry = field(default_factory=TableGeometry)

    def validate(self) -> None:
        for name, row in [("default", self.default_row)] + list(self.classes.items()):
            missing = [p for p in RelPosition if p not in row]
            if missing:
                raise KnowledgeError(f"position row {name!r} missing {missing[0].value}")
            for pos, k in row.items():
                if k not in COEFFICIENTS:
                    raise KnowledgeError(
                        f"position row {name!r}[{pos.value}]: coefficient {k} "
                        f"not in {COEFFICIENTS}"
                    )

    def coefficient(self, anchor_label: str, position: RelPosition) -> float:
        row = self.classes.get(anchor_label)
        if row is None:
            row = self.default_row
        return row[position]

    def with_row(self, label: str, row: dict[RelPosition, float]) -> "PositionTable":
        classes = dict(self.classes)
        classes[label] = dict(row)
        return replace(self, classes=classes)


@dataclass(frozen=True)
class SpatialPredicate:
    first: int  # component index
    second: int
    name: str
    threshold: float = 0.0


PREDICATE_NAMES = (
    "stacked-vertically",
    "overlaps-horizontally",
    "contains",
    "crosses",
    "dot-above",
    "adjacent-right",
)

# component pattern: exact label, "any", or a tuple of alternatives
Pattern = str | tuple[str, ...]


@dataclass(frozen=True)
class HeuristicRule:
    rule_id: str
    components: tuple[Pattern, ...]
    predicates: tuple[SpatialPredicate, ...]
    result: str
    priority: int
    kind: str = "fuse"  # "fuse" consumes components; "rewrite" relabels one
    target: int = 0  # rewritten component (rewrite rules only)

    def validate(self) -> None:
        if not self.components:
            raise KnowledgeError(f"rule {self.rule_id!r} has no components")
        if self.kind not in ("fuse", "rewrite"):
            raise KnowledgeError(f"rule {self.rule_id!r}: unknown kind {self.kind!r}")
        if self.kind == "rewrite" and not 0 <= self.target < len(self.components):
            raise KnowledgeError(f"rule {self.rule_id!r}: target out of range")
        n = len(self.components)
        for pred in self.predicates:
            if pred.name not in PREDICATE_NAMES:
                raise KnowledgeError(
                    f"rule {self.rule_id!r}: unknown predicate {pred.name!r}"
                )
            if not (0 <= pred.first < n and 0 <= pred.second < n):
                raise KnowledgeError(f"rule {self.rule_id!r}: predicate index out of range")


def pattern_matches(pattern: Pattern, label: str) -> bool:
    if pattern == "any":
        return True
    if isinstance(pattern, tuple):
        return label in pattern
    return label == pattern


# ---------------------------------------------------------------------------
# Spatial predicates over bounding boxes. a = first component, b = second.


def _x_overlap(a, b) -> float:
    return max(0.0, min(a.max_x, b.max_x) - max(a.min_x, b.min_x))


def _y_overlap(a, b) -> float:
    return max(0.0, min(a.max_y, b.max_y) - max(a.min_y, b.min_y))


def predicate_holds(name: str, a, b, threshold: float) -> bool:
    """Evaluate one spatial predicate on two bounding boxes."""
    ca = a.center
    cb = b.center
    if name == "stacked-vertically":
        # a above b, x-ranges overlapping, vertical gap bounded by the
        # narrower width (a wide bar far above a narrow one is not a stack)
        if ca[1] >= cb[1] or _x_overlap(a, b) <= 0.0:
            return False
        gap = b.min_y - a.max_y
        return gap <= threshold * min(a.width, b.width)
    if name == "overlaps-horizontally":
        ref = min(a.width, b.width)
        if ref <= 0.0:
            return _x_overlap(a, b) > 0.0 or a.min_x <= b.max_x and b.min_x <= a.max_x
        return _x_overlap(a, b) / ref >= threshold
    if name == "contains":
        pad = threshold * max(a.width, a.height)
        return (
            a.min_x - pad <= b.min_x
            and a.min_y - pad <= b.min_y
            and b.max_x <= a.max_x + pad
            and b.max_y <= a.max_y + pad
        )
    if name == "crosses":
        # the crossing point must be interior to both strokes ('-' through
        # '|'): threshold is the interior margin fraction
        margin_x = threshold * max(a.width, 1e-9)
        margin_y = threshold * max(b.height, 1e-9)
        return (
            a.min_x + margin_x <= cb[0] <= a.max_x - margin_x
            and b.min_y + margin_y <= ca[1] <= b.max_y - margin_y
        )
    if name == "dot-above":
        ref = max(b.width, b.height)
        if ca[1] >= cb[1] or a.max_y > b.min_y + 0.2 * b.height:
            return False
        if abs(ca[0] - cb[0]) > threshold * ref:
            return False
        gap = b.min_y - a.max_y
        return gap <= threshold * ref
    if name == "adjacent-right":
        ref = max(a.height, b.height)
        if ref <= 0.0:
            ref = max(a.width, b.width)
        gap = b.min_x - a.max_x
        if not -0.2 * ref <= gap <= threshold * ref:
            return False
        return _y_overlap(a, b) >= 0.25 * min(a.height, b.height)
    raise KnowledgeError(f"unknown predicate {name!r}")


# ---------------------------------------------------------------------------
# Shipped defaults. The class grouping is an authored artifact: the source
# method stores per-class position permissions without enumerating them.

DIGITS = tuple("0123456789")
LETTERS = tuple("abcdekmnpqstuvwxyz")
OPEN_BRACKETS = ("(", "[", "{")
CLOSE_BRACKETS = (")", "]", "}")
BIG_OP_LABELS = {"Σ": "sum", "Π": "product", "∫": "integral"}
ROOT_LABEL = "√"
FRACTION_BAR = "-"
NUMBER_PARTS = DIGITS + (".", ",")


def _row(**overrides: float) -> dict[RelPosition, float]:
    row = {pos: ALLOWED for pos in RelPosition}
    row[RelPosition.INSIDE] = FORBIDDEN
    for key, value in overrides.items():
        row[RelPosition[key.upper()]] = value
    return row


def default_position_table() -> PositionTable:
    classes: dict[str, dict[RelPosition, float]] = {}
    for label in DIGITS + LETTERS + CLOSE_BRACKETS:
        classes[label] = _row()  # scripts allowed
    for label in ("+", "=", FRACTION_BAR, "|", ".", ",") + OPEN_BRACKETS:
        classes[label] = _row(superscript=FORBIDDEN, subscript=FORBIDDEN)
    for label in BIG_OP_LABELS:
        classes[label] = _row(
            above=REQUIRED, below=REQUIRED, right=REQUIRED,
            superscript=FORBIDDEN, subscript=FORBIDDEN,
        )
    classes[ROOT_LABEL] = _row(
        inside=REQUIRED, upper_left=ALLOWED,
        superscript=FORBIDDEN, subscript=FORBIDDEN,
    )
    table = PositionTable(default_row=_row(), classes=classes)
    table.validate()
    return table


def default_heuristic_rules() -> list[HeuristicRule]:
    """Multi-stroke assembly and abbreviation fusion shipped by default."""
    rules = [
        HeuristicRule(
            "equals-from-bars",
            ("-", "-"),
            (
                SpatialPredicate(0, 1, "stacked-vertically", 0.7),
                SpatialPredicate(0, 1, "overlaps-horizontally", 0.6),
            ),
            result="=",
            priority=100,
        ),
        HeuristicRule(
            "i-from-dot-over-bar",
            (".", "|"),
            (SpatialPredicate(0, 1, "dot-above", 0.8),),
            result="i",
            priority=95,
        ),
        HeuristicRule(
            "plus-from-crossed-bars",
            ("-", "|"),
            (SpatialPredicate(0, 1, "crosses", 0.15),),
            result="+",
            priority=90,
        ),
    ]
    for word in ("sin", "tan", "exp", "min", "max"):
        components = tuple(word)
        predicates = tuple(
            SpatialPredicate(i, i + 1, "adjacent-right", 0.8)
            for i in range(len(word) - 1)
        )
        rules.append(
            HeuristicRule(f"abbrev-{word}", components, predicates,
                          result=word, priority=50)
        )
    for rule in rules:
        rule.validate()
    return rules


# ---------------------------------------------------------------------------
# Serialization (document shape shared with `store`)


def table_to_dict(table: PositionTable) -> dict:
    def row_dict(row: dict[RelPosition, float]) -> dict:
        return {pos.value: row[pos] for pos in RelPosition}

    g = table.geometry
    return {
        "geometry": {
            "reach": g.reach,
            "script_band": g.script_band,
            "inset": g.inset,
            "epsilon_box": g.epsilon_box,
            "script_ratio": g.script_ratio,
        },
        "default": row_dict(table.default_row),
        "classes": {label: row_dict(row) for label, row in sorted(table.classes.items())},
    }


def table_from_dict(doc: dict) -> PositionTable:
    try:
        geometry = TableGeometry(**doc["geometry"])

        def parse_row(raw: dict) -> dict[RelPosition, float]:
            return {RelPosition(name): float(k) for name, k in raw.items()}

        table = PositionTable(
            default_row=parse_row(doc["default"]),
            classes={label: parse_row(raw) for label, raw in doc["classes"].items()},
            geometry=geometry,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise KnowledgeError(f"bad position table: {exc}") from exc
    table.validate()
    return table


def rule_to_dict(rule: HeuristicRule) -> dict:
    return {
        "id": rule.rule_id,
        "components": [list(p) if isinstance(p, tuple) else p for p in rule.components],
        "predicates": [
            {"first": p.first, "second": p.second, "name": p.name, "threshold": p.threshold}
            for p in rule.predicates
        ],
        "result": rule.result,
        "priority": rule.priority,
        "kind": rule.kind,
        "target": rule.target,
    }


def rule_from_dict(doc: dict) -> HeuristicRule:
    try:
        rule = HeuristicRule(
            rule_id=doc["id"],
            components=tuple(
                tuple(p) if isinstance(p, list) else p for p in doc["components"]
            ),
            predicates=tuple(
                SpatialPredicate(p["first"], p["second"], p["name"],
                                 float(p.get("threshold", 0.0)))
                for p in doc["predicates"]
            ),
            result=doc["result"],
            priority=int(doc["priority"]),
            kind=doc.get("kind", "fuse"),
            target=int(doc.get("target", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise KnowledgeError(f"bad heuristic rule: {exc}") from exc
    rule.validate()
    return rule
