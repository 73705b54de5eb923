"""Expression-tree serialization to LaTeX and presentation MathML."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    BigOpNode,
    ExprError,
    ExprNode,
    FractionNode,
    GroupNode,
    NumberNode,
    RootNode,
    RowNode,
    ScriptsNode,
    SymbolNode,
)

LATEX_TARGET = "latex"
MATHML_TARGET = "mathml"


@dataclass(frozen=True)
class RenderOptions:
    target: str = LATEX_TARGET
    spaced_rows: bool = True  # join row children with a space
    autosize_brackets: bool = False  # \left ... \right

    def __post_init__(self) -> None:
        if self.target not in (LATEX_TARGET, MATHML_TARGET):
            raise ExprError(f"unknown render target {self.target!r}")


_LATEX_SYMBOLS = {
    "Σ": r"\sum",
    "Π": r"\prod",
    "∫": r"\int",
    "√": r"\surd",
    "{": r"\{",
    "}": r"\}",
    "unknown": "?",
    "sin": r"\sin",
    "cos": r"\cos",
    "tan": r"\tan",
    "exp": r"\exp",
    "min": r"\min",
    "max": r"\max",
    "lim": r"\lim",
    "log": r"\log",
}

_LATEX_ESCAPES = {c: "\\" + c for c in "#$%&_"}

_BRACKET_CHARS = {"paren": ("(", ")"), "square": ("[", "]"), "brace": (r"\{", r"\}")}

_BIGOP_LATEX = {"sum": r"\sum", "product": r"\prod", "integral": r"\int"}
_BIGOP_MATHML = {"sum": "&#x2211;", "product": "&#x220F;", "integral": "&#x222B;"}


def _latex_symbol(label: str) -> str:
    if label in _LATEX_SYMBOLS:
        return _LATEX_SYMBOLS[label]
    return "".join(_LATEX_ESCAPES.get(c, c) for c in label)


def render(node: ExprNode, opts: RenderOptions | None = None) -> str:
    """Serialize a tree; deterministic structural recursion."""
    opts = opts or RenderOptions()
    if opts.target == LATEX_TARGET:
        return _latex(node, opts)
    return _mathml_document(node)


def render_latex(node: ExprNode, opts: RenderOptions | None = None) -> str:
    return _latex(node, opts or RenderOptions())


def render_mathml(node: ExprNode) -> str:
    return _mathml_document(node)


def _latex(node: ExprNode, opts: RenderOptions) -> str:
    if isinstance(node, SymbolNode):
        return _latex_symbol(node.label)
    if isinstance(node, NumberNode):
        return node.value
    if isinstance(node, RowNode):
        sep = " " if opts.spaced_rows else ""
        return sep.join(_latex(c, opts) for c in node.children)
    if isinstance(node, FractionNode):
        return (
            r"\frac{" + _latex(node.numerator, opts) + "}{"
            + _latex(node.denominator, opts) + "}"
        )
    if isinstance(node, ScriptsNode):
        out = _latex_base(node.base, opts)
        if node.subscript is not None:
            out += "_{" + _latex(node.subscript, opts) + "}"
        if node.superscript is not None:
            out += "^{" + _latex(node.superscript, opts) + "}"
        return out
    if isinstance(node, RootNode):
        if node.degree is not None:
            return r"\sqrt[" + _latex(node.degree, opts) + "]{" + _latex(node.radicand, opts) + "}"
        return r"\sqrt{" + _latex(node.radicand, opts) + "}"
    if isinstance(node, BigOpNode):
        out = _BIGOP_LATEX[node.operator]
        if node.lower is not None:
            out += "_{" + _latex(node.lower, opts) + "}"
        if node.upper is not None:
            out += "^{" + _latex(node.upper, opts) + "}"
        return out + " " + _latex(node.body, opts)
    if isinstance(node, GroupNode):
        left, right = _BRACKET_CHARS[node.bracket]
        inner = _latex(node.child, opts)
        if opts.autosize_brackets:
            return r"\left" + left + " " + inner + r" \right" + right
        return left + inner + right
    raise ExprError(f"cannot render node type {type(node).__name__}")


def _latex_base(base: ExprNode, opts: RenderOptions) -> str:
    # multi-token script bases need braces to bind correctly; symbols
    # (single chars or commands) and bracket groups are self-delimiting
    text = _latex(base, opts)
    if isinstance(base, (SymbolNode, GroupNode)):
        return text
    if isinstance(base, NumberNode) and len(text) == 1:
        return text
    return "{" + text + "}"


# ---------------------------------------------------------------------------
# Presentation MathML


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


_MATHML_SYMBOLS = {"Σ": "&#x2211;", "Π": "&#x220F;", "∫": "&#x222B;", "√": "&#x221A;"}
_OPERATOR_CHARS = set("+-=().,[]{}|<>/")


def _mathml_document(node: ExprNode) -> str:
    return (
        '<math xmlns="http://www.w3.org/1998/Math/MathML">'
        + _mathml(node)
        + "</math>"
    )


def _mrow(node: ExprNode) -> str:
    # MathML slots want exactly one element
    body = _mathml(node)
    if isinstance(node, RowNode):
        return body
    return "<mrow>" + body + "</mrow>"


def _mathml(node: ExprNode) -> str:
    if isinstance(node, SymbolNode):
        label = node.label
        if label in _MATHML_SYMBOLS:
            return "<mo>" + _MATHML_SYMBOLS[label] + "</mo>"
        if label == "unknown":
            return "<mi>?</mi>"
        if len(label) == 1 and label in _OPERATOR_CHARS:
            return "<mo>" + _xml_escape(label) + "</mo>"
        return "<mi>" + _xml_escape(label) + "</mi>"
    if isinstance(node, NumberNode):
        return "<mn>" + _xml_escape(node.value) + "</mn>"
    if isinstance(node, RowNode):
        return "<mrow>" + "".join(_mathml(c) for c in node.children) + "</mrow>"
    if isinstance(node, FractionNode):
        return "<mfrac>" + _mrow(node.numerator) + _mrow(node.denominator) + "</mfrac>"
    if isinstance(node, ScriptsNode):
        base = _mrow(node.base)
        if node.superscript is not None and node.subscript is not None:
            return ("<msubsup>" + base + _mrow(node.subscript)
                    + _mrow(node.superscript) + "</msubsup>")
        if node.superscript is not None:
            return "<msup>" + base + _mrow(node.superscript) + "</msup>"
        return "<msub>" + base + _mrow(node.subscript) + "</msub>"
    if isinstance(node, RootNode):
        if node.degree is not None:
            return "<mroot>" + _mrow(node.radicand) + _mrow(node.degree) + "</mroot>"
        return "<msqrt>" + _mrow(node.radicand) + "</msqrt>"
    if isinstance(node, BigOpNode):
        op = "<mo>" + _BIGOP_MATHML[node.operator] + "</mo>"
        if node.lower is not None and node.upper is not None:
            head = "<munderover>" + op + _mrow(node.lower) + _mrow(node.upper) + "</munderover>"
        elif node.lower is not None:
            head = "<munder>" + op + _mrow(node.lower) + "</munder>"
        elif node.upper is not None:
            head = "<mover>" + op + _mrow(node.upper) + "</mover>"
        else:
            head = op
        return "<mrow>" + head + _mrow(node.body) + "</mrow>"
    if isinstance(node, GroupNode):
        left, right = {"paren": "()", "square": "[]", "brace": "{}"}[node.bracket]
        return ("<mrow><mo>" + _xml_escape(left) + "</mo>" + _mrow(node.child)
                + "<mo>" + _xml_escape(right) + "</mo></mrow>")
    raise ExprError(f"cannot render node type {type(node).__name__}")
