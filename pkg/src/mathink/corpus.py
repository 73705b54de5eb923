"""Synthetic labeled corpus: parametric stroke templates plus an
expression composer with ground-truth trees.

Each of the 40 stroke classes has a polyline template in a unit design
box (y down). Symbols are one or more template strokes; composite
symbols ('=', '+', 'i') exercise reconstruction. Expressions are grown
from a small grammar and laid out recursively; the layout conventions
mirror the structural analyzer's geometry so that noiseless strokes
parse back to the generated tree. Jitter: per-symbol rotation and
scale, per-point Gaussian noise, all seeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    BigOpNode,
    ExprNode,
    FractionNode,
    GroupNode,
    NumberNode,
    RootNode,
    RowNode,
    ScriptsNode,
    SymbolNode,
    node_to_dict,
)
from .ink import InkPoint, InkSession, Stroke
from .render import render_latex


def _arc(cx, cy, rx, ry, start_deg, end_deg, n=12):
    pts = []
    for i in range(n + 1):
        a = math.radians(start_deg + (end_deg - start_deg) * i / n)
        pts.append((cx + rx * math.cos(a), cy + ry * math.sin(a)))
    return pts


# Stroke templates in a unit box, y growing downward. Shapes are chosen so
# that the scale/translation-normalized vertex sequences stay separable.
STROKE_TEMPLATES: dict[str, list[tuple[float, float]]] = {
    "0": _arc(0.5, 0.5, 0.38, 0.5, -90, 270, 16),
    "1": [(0.22, 0.28), (0.52, 0.02), (0.52, 1.0)],
    "2": [(0.12, 0.3), (0.2, 0.08), (0.5, 0.0), (0.8, 0.1), (0.86, 0.32),
          (0.65, 0.6), (0.12, 1.0), (0.9, 1.0)],
    "3": [(0.15, 0.12), (0.45, 0.0), (0.8, 0.14), (0.62, 0.42), (0.45, 0.48),
          (0.66, 0.52), (0.85, 0.72), (0.6, 0.98), (0.2, 0.92)],
    "4": [(0.62, 0.0), (0.1, 0.62), (0.9, 0.62), (0.68, 0.34), (0.68, 1.0)],
    "5": [(0.85, 0.02), (0.22, 0.02), (0.16, 0.42), (0.55, 0.36), (0.84, 0.56),
          (0.8, 0.85), (0.5, 1.0), (0.15, 0.88)],
    "6": [(0.72, 0.02), (0.38, 0.2), (0.2, 0.55), (0.24, 0.86), (0.52, 1.0),
          (0.78, 0.82), (0.7, 0.58), (0.4, 0.58)],
    "7": [(0.1, 0.02), (0.9, 0.02), (0.42, 1.0)],
    "8": (_arc(0.5, 0.27, 0.3, 0.27, 90, 450, 10)
          + _arc(0.5, 0.76, 0.36, 0.24, -90, 270, 10)),
    "9": _arc(0.52, 0.3, 0.32, 0.3, 0, 360, 10) + [(0.84, 0.35), (0.6, 1.0)],
    "a": _arc(0.45, 0.5, 0.33, 0.42, -35, 325, 10) + [(0.78, 0.2), (0.8, 1.0)],
    "b": [(0.18, 0.0), (0.18, 1.0), (0.2, 0.62), (0.5, 0.45), (0.8, 0.62),
          (0.78, 0.88), (0.5, 1.0), (0.2, 0.92)],
    "c": _arc(0.52, 0.5, 0.38, 0.48, -60, 60, 10)[::-1],
    "d": [(0.8, 0.0), (0.8, 1.0), (0.78, 0.62), (0.48, 0.45), (0.18, 0.62),
          (0.2, 0.88), (0.5, 1.0), (0.78, 0.92)],
    "e": [(0.15, 0.55), (0.82, 0.5), (0.78, 0.18), (0.45, 0.02), (0.15, 0.25),
          (0.12, 0.6), (0.4, 0.98), (0.8, 0.9)],
    "k": [(0.18, 0.0), (0.18, 1.0), (0.2, 0.55), (0.75, 0.1), (0.4, 0.52),
          (0.8, 1.0)],
    "m": [(0.1, 1.0), (0.1, 0.1), (0.14, 0.3), (0.3, 0.04), (0.46, 0.16),
          (0.48, 1.0), (0.5, 0.3), (0.66, 0.04), (0.84, 0.16), (0.88, 1.0)],
    "n": [(0.18, 0.0), (0.18, 1.0), (0.2, 0.32), (0.45, 0.04), (0.72, 0.14),
          (0.8, 0.45), (0.8, 1.0)],
    "p": [(0.2, 0.08), (0.2, 1.0), (0.22, 0.5), (0.22, 0.14), (0.55, 0.0),
          (0.82, 0.16), (0.8, 0.42), (0.5, 0.56), (0.22, 0.46)],
    "q": [(0.78, 0.14), (0.45, 0.0), (0.16, 0.16), (0.18, 0.42), (0.5, 0.56),
          (0.76, 0.44), (0.78, 0.08), (0.78, 1.0)],
    "s": [(0.8, 0.1), (0.45, 0.0), (0.16, 0.16), (0.4, 0.4), (0.72, 0.6),
          (0.82, 0.82), (0.5, 1.0), (0.14, 0.88)],
    "t": [(0.42, 0.0), (0.42, 0.72), (0.5, 0.94), (0.72, 1.0), (0.85, 0.88)],
    "u": [(0.12, 0.0), (0.14, 0.6), (0.3, 0.95), (0.58, 0.92), (0.78, 0.6),
          (0.82, 0.0), (0.84, 0.55), (0.9, 1.0)],
    "v": [(0.1, 0.0), (0.5, 1.0), (0.9, 0.0)],
    "w": [(0.05, 0.0), (0.27, 1.0), (0.5, 0.25), (0.73, 1.0), (0.95, 0.0)],
    "x": [(0.1, 0.0), (0.9, 1.0), (0.5, 0.5), (0.9, 0.0), (0.1, 1.0)],
    "y": [(0.1, 0.0), (0.48, 0.52), (0.85, 0.0), (0.4, 1.0)],
    "z": [(0.1, 0.02), (0.9, 0.02), (0.1, 0.98), (0.9, 0.98)],
    "-": [(0.0, 0.5), (1.0, 0.5)],
    "|": [(0.5, 0.0), (0.5, 1.0)],
    ".": [(0.5, 0.5), (0.5, 0.5)],  # a tap: zero-extent on purpose
    ",": [(0.55, 0.0), (0.8, 0.2), (0.62, 0.6), (0.2, 1.0)],
    "(": [(0.72, 0.0), (0.4, 0.2), (0.28, 0.5), (0.4, 0.8), (0.72, 1.0)],
    ")": [(0.28, 0.0), (0.6, 0.2), (0.72, 0.5), (0.6, 0.8), (0.28, 1.0)],
    "[": [(0.72, 0.02), (0.34, 0.02), (0.34, 0.98), (0.72, 0.98)],
    "]": [(0.28, 0.02), (0.66, 0.02), (0.66, 0.98), (0.28, 0.98)],
    "Σ": [(0.88, 0.1), (0.12, 0.02), (0.56, 0.5), (0.12, 0.98), (0.88, 0.9)],
    "Π": [(0.1, 1.0), (0.12, 0.04), (0.04, 0.02), (0.96, 0.02), (0.88, 0.04),
          (0.9, 1.0)],
    "∫": [(0.78, 0.08), (0.6, 0.0), (0.47, 0.12), (0.45, 0.88), (0.32, 1.0),
          (0.14, 0.92)],
    "√": [(0.02, 0.5), (0.1, 0.45), (0.22, 1.0), (0.38, 0.0), (1.0, 0.0)],
}


def _tighten_templates() -> None:
    # rescale every template to span [0, 1] tightly so a symbol's design
    # box coincides with its ink bbox (the layout gap arithmetic relies
    # on that); the aspect table below reflects the tight extents
    for label, pts in STROKE_TEMPLATES.items():
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ex, ey = max(xs) - min(xs), max(ys) - min(ys)
        if ex <= 0.0 and ey <= 0.0:
            continue  # the tap stays a point
        sx = 1.0 / ex if ex > 0 else 0.0
        sy = 1.0 / ey if ey > 0 else 0.0
        STROKE_TEMPLATES[label] = [
            ((p[0] - min(xs)) * sx if ex > 0 else 0.5,
             (p[1] - min(ys)) * sy if ey > 0 else 0.5)
            for p in pts
        ]

STROKE_CLASSES = sorted(STROKE_TEMPLATES)  # the 40 classifier classes

# symbol box aspect (width, height) at unit size; templates fill their
# box tightly, so this is the ink bbox shape
_ASPECT: dict[str, tuple[float, float]] = {
    **{d: (0.62, 1.0) for d in "0123456789"},
    **{c: (0.6, 1.0) for c in "abcdeknpqstuvxyz"},
    "m": (0.88, 1.0),
    "w": (0.88, 1.0),
    "1": (0.3, 1.0),
    "-": (0.72, 0.07),
    "|": (0.1, 1.0),
    ".": (0.08, 0.08),
    ",": (0.2, 0.38),
    "(": (0.3, 1.0),
    ")": (0.3, 1.0),
    "[": (0.3, 1.0),
    "]": (0.3, 1.0),
    "Σ": (0.85, 1.0),
    "Π": (0.85, 1.0),
    "∫": (0.5, 1.0),
    "√": (1.0, 1.0),
    "=": (0.72, 0.5),
    "+": (0.7, 0.7),
    "i": (0.26, 1.0),
}

_tighten_templates()

# composite symbols: (stroke class, sub-box in the symbol's design box)
_SYMBOL_PARTS: dict[str, list[tuple[str, tuple[float, float, float, float]]]] = {
    "=": [("-", (0.0, 0.12, 1.0, 0.26)), ("-", (0.0, 0.74, 1.0, 0.88))],
    "+": [("-", (0.0, 0.46, 1.0, 0.54)), ("|", (0.46, 0.0, 0.54, 1.0))],
    "i": [(".", (0.35, 0.0, 0.65, 0.12)), ("|", (0.3, 0.3, 0.7, 1.0))],
}

VARIABLES = tuple("abcdekmnpqstuvwxyz") + ("i",)
ABBREVIATIONS = ("sin", "tan", "exp", "min", "max")


@dataclass(frozen=True)
class JitterParams:
    rotation_deg: float = 5.0
    scale_low: float = 0.8
    scale_high: float = 1.2
    point_noise: float = 0.011  # sigma as a fraction of symbol size
    points_per_stroke: int = 44

    @staticmethod
    def none() -> "JitterParams":
        return JitterParams(rotation_deg=0.0, scale_low=1.0, scale_high=1.0,
                            point_noise=0.0)


@dataclass
class PlacedSymbol:
    label: str
    box: tuple[float, float, float, float]  # absolute coords
    stroke_ids: list[str] = field(default_factory=list)
    # absolute (stroke class, box) parts; None = look up _SYMBOL_PARTS
    part_boxes: list[tuple[str, tuple[float, float, float, float]]] | None = None


def stroke_parts_for(label: str,
                     box: tuple[float, float, float, float]) -> list[
                         tuple[str, tuple[float, float, float, float]]]:
    """Absolute (stroke class, box) pairs composing one symbol."""
    x0, y0, x1, y1 = box
    out = []
    for stroke_class, (px0, py0, px1, py1) in _SYMBOL_PARTS.get(
            label, [(label, (0.0, 0.0, 1.0, 1.0))]):
        out.append((stroke_class, (
            x0 + px0 * (x1 - x0), y0 + py0 * (y1 - y0),
            x0 + px1 * (x1 - x0), y0 + py1 * (y1 - y0),
        )))
    return out


@dataclass
class Piece:
    """A laid-out sub-expression: local size plus symbol boxes."""

    width: float
    height: float
    symbols: list[PlacedSymbol]
    node: ExprNode

    def shift(self, dx: float, dy: float) -> None:
        for s in self.symbols:
            x0, y0, x1, y1 = s.box
            s.box = (x0 + dx, y0 + dy, x1 + dx, y1 + dy)
            if s.part_boxes is not None:
                s.part_boxes = [
                    (cls, (bx0 + dx, by0 + dy, bx1 + dx, by1 + dy))
                    for cls, (bx0, by0, bx1, by1) in s.part_boxes
                ]


@dataclass
class GeneratedExpression:
    expr_id: str
    session: InkSession
    stroke_labels: dict[str, str]
    symbols: list[PlacedSymbol]
    tree: ExprNode
    latex: str


S = 48.0  # base symbol height in ink units
ROW_GAP = 0.3
NUM_GAP = 0.1
SCRIPT_SCALE = 0.55
FRAC_SCALE = 0.8
LIMIT_SCALE = 0.5


def _leaf(label: str, size: float) -> Piece:
    aw, ah = _ASPECT[label]
    node: ExprNode = NumberNode(label) if label in "0123456789" else SymbolNode(label)
    return Piece(aw * size, ah * size,
                 [PlacedSymbol(label, (0.0, 0.0, aw * size, ah * size))], node)


def _row_piece(pieces: list[Piece], size: float, gap: float,
               node: ExprNode | None = None) -> Piece:
    height = max(p.height for p in pieces)
    x = 0.0
    symbols: list[PlacedSymbol] = []
    for i, p in enumerate(pieces):
        if i > 0:
            x += gap * size
        label = p.symbols[0].label if len(p.symbols) == 1 else None
        if label in (".", ","):
            dy = height - p.height  # decimal marks sit on the baseline
        else:
            dy = (height - p.height) / 2.0
        p.shift(x, dy)
        symbols.extend(p.symbols)
        x += p.width
    if node is None:
        children: list[ExprNode] = []
        for p in pieces:
            # the analyzer emits maximally flat rows; mirror that here
            if isinstance(p.node, RowNode):
                children.extend(p.node.children)
            else:
                children.append(p.node)
        node = children[0] if len(children) == 1 else RowNode(tuple(children))
    return Piece(x, height, symbols, node)


class Composer:
    """Grows random expressions with consistent layout and ground truth."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def choice(self, seq):
        return seq[int(self.rng.integers(0, len(seq)))]

    # -- leaves ---------------------------------------------------------------

    def number(self, size: float, max_digits: int = 3, decimal_ok: bool = True) -> Piece:
        n_digits = int(self.rng.integers(1, max_digits + 1))
        digits = [self.choice("0123456789") for _ in range(n_digits)]
        if digits[0] == "0" and n_digits > 1:
            digits[0] = self.choice("123456789")
        pieces = [_leaf(d, size) for d in digits]
        value = "".join(digits)
        if decimal_ok and n_digits >= 2 and self.rng.random() < 0.35:
            mark = "." if self.rng.random() < 0.7 else ","
            cut = int(self.rng.integers(1, n_digits))
            pieces.insert(cut, _leaf(mark, size))
            value = value[:cut] + mark + value[cut:]
        return _row_piece(pieces, size, NUM_GAP, NumberNode(value))

    def variable(self, size: float) -> Piece:
        label = self.choice(VARIABLES)
        return self.symbol(label, size)

    def symbol(self, label: str, size: float) -> Piece:
        aw, ah = _ASPECT[label]
        node: ExprNode = NumberNode(label) if label in "0123456789" else SymbolNode(label)
        return Piece(aw * size, ah * size,
                     [PlacedSymbol(label, (0.0, 0.0, aw * size, ah * size))], node)

    # -- constructs -----------------------------------------------------------

    def fraction(self, size: float, depth: int) -> Piece:
        child = size * FRAC_SCALE
        num = self.simple_row(child, depth + 1)
        den = self.simple_row(child, depth + 1)
        bar_w = 1.18 * max(num.width, den.width)
        bar_h = 0.07 * size
        gap = 0.16 * size
        width = bar_w
        num.shift((width - num.width) / 2.0, 0.0)
        bar_y = num.height + gap
        den.shift((width - den.width) / 2.0, bar_y + bar_h + gap)
        bar = PlacedSymbol("-", (0.0, bar_y, bar_w, bar_y + bar_h))
        symbols = num.symbols + [bar] + den.symbols
        height = bar_y + bar_h + gap + den.height
        return Piece(width, height, symbols, FractionNode(num.node, den.node))

    def scripted(self, size: float, depth: int) -> Piece:
        base = self.variable(size)
        script = self.script_content(size * SCRIPT_SCALE, depth + 1)
        kind = self.choice(["sup", "sub", "both"]) if depth == 0 else self.choice(["sup", "sub"])
        sup = script if kind in ("sup", "both") else None
        sub = self.script_content(size * SCRIPT_SCALE, depth + 1) if kind == "both" else (
            script if kind == "sub" else None)
        x = base.width + 0.07 * size
        symbols = list(base.symbols)
        width = base.width
        if sup is not None:
            # bottom of the superscript sits a quarter-height into the base
            sup.shift(x, 0.25 * base.height - sup.height)
            symbols += sup.symbols
            width = max(width, x + sup.width)
        if sub is not None:
            sub.shift(x, 0.75 * base.height)
            symbols += sub.symbols
            width = max(width, x + sub.width)
        top = min(0.0, min(s.box[1] for s in symbols))
        bottom = max(base.height, max(s.box[3] for s in symbols))
        piece = Piece(width, bottom - top, symbols,
                      ScriptsNode(base.node,
                                  superscript=sup.node if sup else None,
                                  subscript=sub.node if sub else None))
        piece.shift(0.0, -top)
        return piece

    def script_content(self, size: float, depth: int) -> Piece:
        r = self.rng.random()
        if r < 0.5:
            return self.number(size, max_digits=2, decimal_ok=False)
        if r < 0.9:
            return self.variable(size)
        return _row_piece(
            [self.variable(size), self.symbol("+", size), self.number(size, 1, False)],
            size, ROW_GAP)

    def root(self, size: float, depth: int) -> Piece:
        content = self.simple_row(size * 0.9, depth + 1, max_items=2)
        pad_left = 0.5 * size
        pad_right = 0.3 * size
        pad_top = 0.3 * size
        pad_bottom = 0.16 * size
        width = pad_left + content.width + pad_right
        height = pad_top + content.height + pad_bottom
        content.shift(pad_left, pad_top)
        glyph = PlacedSymbol("√", (0.0, 0.0, width, height))
        node = RootNode(content.node)
        return Piece(width, height, [glyph] + content.symbols, node)

    def big_op(self, size: float, depth: int) -> Piece:
        label = self.choice(["Σ", "Π", "∫"])
        op = self.symbol(label, size * 1.5)
        upper = self.upper_limit(size * LIMIT_SCALE)
        lower = self.lower_limit(size * LIMIT_SCALE)
        body = self.simple_row(size, depth + 1, max_items=2)
        vgap = 0.14 * size
        op_x = max(0.0, (upper.width - op.width) / 2.0, (lower.width - op.width) / 2.0)
        upper.shift(op_x + (op.width - upper.width) / 2.0, 0.0)
        op.shift(op_x, upper.height + vgap)
        lower.shift(op_x + (op.width - lower.width) / 2.0,
                    upper.height + vgap + op.height + vgap)
        body_x = op_x + op.width + 0.34 * size
        body_y = upper.height + vgap + (op.height - body.height) / 2.0
        body.shift(body_x, body_y)
        width = max(body_x + body.width, op_x + op.width,
                    max(s.box[2] for s in upper.symbols + lower.symbols))
        height = upper.height + vgap + op.height + vgap + lower.height
        node = BigOpNode(
            {"Σ": "sum", "Π": "product", "∫": "integral"}[label],
            body.node, lower=lower.node, upper=upper.node,
        )
        return Piece(width, height,
                     op.symbols + upper.symbols + lower.symbols + body.symbols, node)

    def upper_limit(self, size: float) -> Piece:
        if self.rng.random() < 0.6:
            return self.number(size, max_digits=2, decimal_ok=False)
        return self.variable(size)

    def lower_limit(self, size: float) -> Piece:
        if self.rng.random() < 0.6:
            return _row_piece(
                [self.variable(size), self.symbol("=", size),
                 self.number(size, 1, False)],
                size, 0.22)
        return self.variable(size)

    def group(self, size: float, depth: int) -> Piece:
        content = self.simple_row(size, depth + 1, max_items=3)
        kind = self.choice(["paren", "paren", "square"])
        left_l, right_l = {"paren": ("(", ")"), "square": ("[", "]")}[kind]
        h = content.height + 0.2 * size
        bw = max(0.28 * size, 0.3 * h)
        gap = 0.12 * size
        content.shift(bw + gap, 0.1 * size)
        left = PlacedSymbol(left_l, (0.0, 0.0, bw, h))
        right_x = bw + gap + content.width + gap
        right = PlacedSymbol(right_l, (right_x, 0.0, right_x + bw, h))
        return Piece(right_x + bw, h, [left] + content.symbols + [right],
                     GroupNode(kind, content.node))

    def abbreviation(self, size: float, depth: int) -> Piece:
        word = self.choice(ABBREVIATIONS)
        letters = _row_piece([self.symbol(c, size) for c in word], size, 0.16,
                             SymbolNode(word))
        # reconstruction fuses the letters, so the ground truth is one symbol
        parts = []
        for placed in letters.symbols:
            parts.extend(stroke_parts_for(placed.label, placed.box))
        union = (
            min(p.box[0] for p in letters.symbols),
            min(p.box[1] for p in letters.symbols),
            max(p.box[2] for p in letters.symbols),
            max(p.box[3] for p in letters.symbols),
        )
        letters.symbols = [PlacedSymbol(word, union, part_boxes=parts)]
        arg = self.group_of(self.variable(size), size)
        piece = _row_piece([letters, arg], size, 0.2, None)
        piece.node = RowNode((SymbolNode(word), arg.node))
        return piece

    def group_of(self, content: Piece, size: float) -> Piece:
        h = content.height + 0.2 * size
        bw = max(0.28 * size, 0.3 * h)
        gap = 0.12 * size
        content = Piece(content.width, content.height, content.symbols, content.node)
        content.shift(bw + gap, 0.1 * size)
        left = PlacedSymbol("(", (0.0, 0.0, bw, h))
        right_x = bw + gap + content.width + gap
        right = PlacedSymbol(")", (right_x, 0.0, right_x + bw, h))
        return Piece(right_x + bw, h, [left] + content.symbols + [right],
                     GroupNode("paren", content.node))

    # -- rows and whole expressions -------------------------------------------

    def term(self, size: float, depth: int) -> Piece:
        r = self.rng.random()
        if depth >= 2:
            return self.number(size) if r < 0.5 else self.variable(size)
        if r < 0.16:
            return self.number(size)
        if r < 0.32:
            return self.variable(size)
        if r < 0.5:
            return self.scripted(size, depth)
        if r < 0.66:
            return self.fraction(size, depth)
        if r < 0.76:
            return self.root(size, depth)
        if r < 0.84:
            return self.group(size, depth)
        if r < 0.92:
            return self.big_op(size, depth)
        return self.abbreviation(size, depth)

    def simple_row(self, size: float, depth: int, max_items: int = 2) -> Piece:
        n = 1 if self.rng.random() < 0.6 else int(self.rng.integers(2, max_items + 1))
        pieces = [self.simple_atom(size, depth)]
        for _ in range(n - 1):
            pieces.append(self.symbol(self.choice(["+", "-"]), size))
            pieces.append(self.simple_atom(size, depth))
        return _row_piece(pieces, size, ROW_GAP)

    def simple_atom(self, size: float, depth: int) -> Piece:
        r = self.rng.random()
        if depth >= 2 or r < 0.45:
            return self.variable(size) if self.rng.random() < 0.55 else self.number(
                size, max_digits=2)
        if r < 0.6:
            return self.scripted(size, depth)
        if r < 0.8:
            return self.number(size, max_digits=2)
        return self.variable(size)

    def expression(self) -> Piece:
        sides = []
        n_sides = 2 if self.rng.random() < 0.55 else 1
        for _ in range(n_sides):
            terms = [self.term(S, 0)]
            while len(terms) < 3 and self.rng.random() < 0.35:
                # a big operator's body runs to the end of its side, so
                # nothing may follow one at the same level
                if isinstance(terms[-1].node, BigOpNode):
                    break
                terms.append(self.symbol(self.choice(["+", "-"]), S))
                terms.append(self.term(S, 0))
            sides.append(_row_piece(terms, S, ROW_GAP))
        if n_sides == 2:
            piece = _row_piece([sides[0], self.symbol("=", S), sides[1]], S, ROW_GAP)
        else:
            piece = sides[0]
        if isinstance(piece.node, RowNode) and len(piece.node.children) == 1:
            piece.node = piece.node.children[0]
        return piece


# ---------------------------------------------------------------------------
# Stroke instantiation with jitter


def _resample(points: list[tuple[float, float]], n: int) -> list[tuple[float, float]]:
    if len(points) < 2:
        return [points[0]] * n
    lengths = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(points, points[1:])]
    total = sum(lengths)
    if total == 0.0:
        return [points[0]] * n
    out = []
    seg, start = 0, 0.0
    for k in range(n):
        target = min(total * k / (n - 1), total)
        while seg < len(lengths) - 1 and start + lengths[seg] < target:
            start += lengths[seg]
            seg += 1
        t = 0.0 if lengths[seg] == 0 else (target - start) / lengths[seg]
        a, b = points[seg], points[seg + 1]
        out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def instantiate_strokes(symbols: list[PlacedSymbol], rng: np.random.Generator,
                        jitter: JitterParams, t0: int = 0,
                        id_prefix: str = "s") -> tuple[list[Stroke], dict[str, str]]:
    """Emit jittered strokes for placed symbols; labels keyed by stroke id."""
    strokes: list[Stroke] = []
    labels: dict[str, str] = {}
    counter = 0
    t = t0
    for symbol in symbols:
        x0, y0, x1, y1 = symbol.box
        cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        size = max(x1 - x0, y1 - y0)
        theta = math.radians(float(rng.uniform(-jitter.rotation_deg, jitter.rotation_deg)))
        scale = float(rng.uniform(jitter.scale_low, jitter.scale_high))
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        if symbol.part_boxes is not None:
            parts = symbol.part_boxes
        else:
            parts = stroke_parts_for(symbol.label, symbol.box)
        symbol.stroke_ids = []
        for stroke_class, (bx0, by0, bx1, by1) in parts:
            bw = bx1 - bx0
            bh = by1 - by0
            template = STROKE_TEMPLATES[stroke_class]
            dense = _resample(template, jitter.points_per_stroke)
            pts = []
            degenerate = stroke_class == "."
            for u, v in dense:
                px = bx0 + u * bw
                py = by0 + v * bh
                # rotate and scale about the symbol center
                dx, dy = px - cx, py - cy
                px = cx + scale * (cos_t * dx - sin_t * dy)
                py = cy + scale * (sin_t * dx + cos_t * dy)
                if jitter.point_noise > 0.0 and not degenerate:
                    px += float(rng.normal(0.0, jitter.point_noise * size))
                    py += float(rng.normal(0.0, jitter.point_noise * size))
                pts.append((px, py))
            sid = f"{id_prefix}{counter}"
            counter += 1
            stroke = Stroke(sid, tuple(
                InkPoint(px, py, t + 8 * i) for i, (px, py) in enumerate(pts)
            ))
            t += 8 * len(pts) + 120
            strokes.append(stroke)
            labels[sid] = stroke_class
            symbol.stroke_ids.append(sid)
    return strokes, labels


def generate_expression(expr_id: str, rng: np.random.Generator,
                        jitter: JitterParams) -> GeneratedExpression:
    composer = Composer(rng)
    piece = composer.expression()
    piece.shift(20.0, 20.0)
    strokes, labels = instantiate_strokes(piece.symbols, rng, jitter)
    session = InkSession()
    for stroke in strokes:
        session.add(stroke)
    return GeneratedExpression(expr_id, session, labels, piece.symbols,
                               piece.node, render_latex(piece.node))


def generate_symbol_sample(label: str, rng: np.random.Generator,
                           jitter: JitterParams,
                           size: float = S) -> tuple[list[Stroke], dict[str, str]]:
    """Strokes for one isolated symbol (used for per-class coverage)."""
    aw, ah = _ASPECT[label]
    placed = PlacedSymbol(label, (20.0, 20.0, 20.0 + aw * size, 20.0 + ah * size))
    return instantiate_strokes([placed], rng, jitter)


def expression_to_dict(expr: GeneratedExpression) -> dict:
    from .ink import session_to_dict

    return {
        "id": expr.expr_id,
        "ink": session_to_dict(expr.session),
        "stroke_labels": dict(sorted(expr.stroke_labels.items())),
        "symbols": [
            {"label": s.label, "stroke_ids": list(s.stroke_ids)}
            for s in expr.symbols
        ],
        "tree": node_to_dict(expr.tree),
        "latex": expr.latex,
    }


@dataclass
class CorpusExpression:
    expr_id: str
    session: InkSession
    stroke_labels: dict[str, str]
    symbols: list[tuple[str, tuple[str, ...]]]  # (label, stroke ids)
    tree: ExprNode
    latex: str


def expression_from_dict(doc: dict) -> CorpusExpression:
    from .expr import node_from_dict
    from .ink import session_from_dict

    return CorpusExpression(
        doc["id"],
        session_from_dict(doc["ink"]),
        dict(doc["stroke_labels"]),
        [(s["label"], tuple(s["stroke_ids"])) for s in doc["symbols"]],
        node_from_dict(doc["tree"]),
        doc["latex"],
    )


def generate_corpus(seed: int, n_expressions: int, jitter: JitterParams | None = None,
                    id_prefix: str = "x") -> list[GeneratedExpression]:
    """Seeded, deterministic corpus of labeled expressions."""
    rng = np.random.default_rng(seed)
    jitter = jitter or JitterParams()
    return [
        generate_expression(f"{id_prefix}{i}", rng, jitter)
        for i in range(n_expressions)
    ]


def corpus_to_dict(expressions: list[GeneratedExpression], seed: int,
                   jitter: JitterParams) -> dict:
    return {
        "version": 1,
        "kind": "corpus",
        "seed": seed,
        "jitter": {
            "rotation_deg": jitter.rotation_deg,
            "scale_low": jitter.scale_low,
            "scale_high": jitter.scale_high,
            "point_noise": jitter.point_noise,
            "points_per_stroke": jitter.points_per_stroke,
        },
        "expressions": [expression_to_dict(e) for e in expressions],
    }


def corpus_from_dict(doc: dict) -> list[CorpusExpression]:
    if doc.get("version") != 1 or doc.get("kind") != "corpus":
        raise ValueError("not a corpus document")
    return [expression_from_dict(raw) for raw in doc["expressions"]]
