"""Recursive expression tree produced by structural analysis."""

from __future__ import annotations

from dataclasses import dataclass


class ExprError(ValueError):
    """Structurally invalid tree (missing required slot, bad operator)."""


BIG_OPERATORS = ("sum", "product", "integral")
BRACKET_KINDS = ("paren", "square", "brace")


@dataclass(frozen=True)
class SymbolNode:
    label: str


@dataclass(frozen=True)
class NumberNode:
    value: str  # digit / point / comma sequence

    def __post_init__(self) -> None:
        if not self.value:
            raise ExprError("empty number")


@dataclass(frozen=True)
class RowNode:
    children: tuple["ExprNode", ...]


@dataclass(frozen=True)
class FractionNode:
    numerator: "ExprNode"
    denominator: "ExprNode"

    def __post_init__(self) -> None:
        if self.numerator is None or self.denominator is None:
            raise ExprError("fraction requires both numerator and denominator")


@dataclass(frozen=True)
class ScriptsNode:
    base: "ExprNode"
    superscript: "ExprNode | None" = None
    subscript: "ExprNode | None" = None

    def __post_init__(self) -> None:
        if self.base is None:
            raise ExprError("scripts require a base")
        if self.superscript is None and self.subscript is None:
            raise ExprError("scripts require at least one script")


@dataclass(frozen=True)
class RootNode:
    radicand: "ExprNode"
    degree: "ExprNode | None" = None

    def __post_init__(self) -> None:
        if self.radicand is None:
            raise ExprError("root requires a radicand")


@dataclass(frozen=True)
class BigOpNode:
    operator: str  # sum | product | integral
    body: "ExprNode"
    lower: "ExprNode | None" = None
    upper: "ExprNode | None" = None

    def __post_init__(self) -> None:
        if self.operator not in BIG_OPERATORS:
            raise ExprError(f"unknown big operator {self.operator!r}")
        if self.body is None:
            raise ExprError("big operator requires a body")


@dataclass(frozen=True)
class GroupNode:
    bracket: str  # paren | square | brace
    child: "ExprNode"

    def __post_init__(self) -> None:
        if self.bracket not in BRACKET_KINDS:
            raise ExprError(f"unknown bracket kind {self.bracket!r}")


ExprNode = (
    SymbolNode | NumberNode | RowNode | FractionNode | ScriptsNode
    | RootNode | BigOpNode | GroupNode
)


def node_to_dict(node: ExprNode) -> dict:
    """JSON-shaped form used by the wire protocol and corpus files."""
    if isinstance(node, SymbolNode):
        return {"kind": "symbol", "label": node.label}
    if isinstance(node, NumberNode):
        return {"kind": "number", "value": node.value}
    if isinstance(node, RowNode):
        return {"kind": "row", "children": [node_to_dict(c) for c in node.children]}
    if isinstance(node, FractionNode):
        return {
            "kind": "fraction",
            "numerator": node_to_dict(node.numerator),
            "denominator": node_to_dict(node.denominator),
        }
    if isinstance(node, ScriptsNode):
        out: dict = {"kind": "scripts", "base": node_to_dict(node.base)}
        if node.superscript is not None:
            out["superscript"] = node_to_dict(node.superscript)
        if node.subscript is not None:
            out["subscript"] = node_to_dict(node.subscript)
        return out
    if isinstance(node, RootNode):
        out = {"kind": "root", "radicand": node_to_dict(node.radicand)}
        if node.degree is not None:
            out["degree"] = node_to_dict(node.degree)
        return out
    if isinstance(node, BigOpNode):
        out = {"kind": "bigop", "operator": node.operator, "body": node_to_dict(node.body)}
        if node.lower is not None:
            out["lower"] = node_to_dict(node.lower)
        if node.upper is not None:
            out["upper"] = node_to_dict(node.upper)
        return out
    if isinstance(node, GroupNode):
        return {"kind": "group", "bracket": node.bracket, "child": node_to_dict(node.child)}
    raise ExprError(f"unknown node type {type(node).__name__}")


def node_from_dict(doc: dict) -> ExprNode:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ExprError("expression node must be an object with 'kind'")
    kind = doc["kind"]
    if kind == "symbol":
        return SymbolNode(doc["label"])
    if kind == "number":
        return NumberNode(doc["value"])
    if kind == "row":
        return RowNode(tuple(node_from_dict(c) for c in doc["children"]))
    if kind == "fraction":
        return FractionNode(node_from_dict(doc["numerator"]), node_from_dict(doc["denominator"]))
    if kind == "scripts":
        return ScriptsNode(
            node_from_dict(doc["base"]),
            node_from_dict(doc["superscript"]) if "superscript" in doc else None,
            node_from_dict(doc["subscript"]) if "subscript" in doc else None,
        )
    if kind == "root":
        return RootNode(
            node_from_dict(doc["radicand"]),
            node_from_dict(doc["degree"]) if "degree" in doc else None,
        )
    if kind == "bigop":
        return BigOpNode(
            doc["operator"],
            node_from_dict(doc["body"]),
            node_from_dict(doc["lower"]) if "lower" in doc else None,
            node_from_dict(doc["upper"]) if "upper" in doc else None,
        )
    if kind == "group":
        return GroupNode(doc["bracket"], node_from_dict(doc["child"]))
    raise ExprError(f"unknown node kind {kind!r}")
