"""Structural analysis of the recognized symbol stream.

Three stages, re-run in full after every edit: reconstruction (multi-stroke
symbols and context label fixes via the heuristic rule base), placement
scoring of relative positions (best position maximizes NP = P * k, where P
is the percent of the placed symbol's box inside the position region and k
is the 0 / 1 / 1.5 coefficient from the position table), and grouping into
the expression tree (brackets, fractions, big operators, roots, scripts,
numbers, rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

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
)
from .ink import BBox
from .knowledge import (
    BIG_OP_LABELS,
    CLOSE_BRACKETS,
    FRACTION_BAR,
    NUMBER_PARTS,
    OPEN_BRACKETS,
    ROOT_LABEL,
    POSITION_ORDER,
    HeuristicRule,
    PositionTable,
    RelPosition,
    TableGeometry,
    pattern_matches,
    predicate_holds,
)

_BRACKET_KIND = {"(": "paren", ")": "paren", "[": "square", "]": "square",
                 "{": "brace", "}": "brace"}


class StructureError(ValueError):
    """Grouping failed (orphan bracket, empty required slot)."""


class ReconstructionError(ValueError):
    """The heuristic rule base failed to reach a fixed point."""


@dataclass(frozen=True)
class RecognizedStroke:
    """One classified stroke: the input unit of structural analysis."""

    stroke_id: str
    label: str
    bbox: BBox
    confidence: float = 1.0


@dataclass(frozen=True)
class SymbolInstance:
    id: str
    label: str
    stroke_ids: tuple[str, ...]
    bbox: BBox
    confidence: float

    def __post_init__(self) -> None:
        if not self.stroke_ids:
            raise StructureError(f"symbol {self.id!r} has no member strokes")


@dataclass(frozen=True)
class PlacementCandidate:
    anchor_id: str
    position: RelPosition
    overlap: float  # P, percent of the placed symbol inside the region
    coefficient: float  # k
    score: float  # NP = P * k


def _reading_key(bbox: BBox, label: str = "", ident: str = ""):
    cx, cy = bbox.center
    return (cx, cy, bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y, label, ident)


# ---------------------------------------------------------------------------
# Placement geometry


def overlap_percent(placed: BBox, region: BBox) -> float:
    """100 * area(placed intersect region) / area(placed)."""
    if placed.area <= 0.0:
        raise StructureError("placed bbox must have positive area (inflate first)")
    ix = min(placed.max_x, region.max_x) - max(placed.min_x, region.min_x)
    iy = min(placed.max_y, region.max_y) - max(placed.min_y, region.min_y)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    return 100.0 * (ix * iy) / placed.area


def inflate_bbox(bbox: BBox, min_extent: float) -> BBox:
    """Grow degenerate boxes (dots, bars) to a minimum extent per axis."""
    cx, cy = bbox.center
    w = max(bbox.width, min_extent)
    h = max(bbox.height, min_extent)
    return BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def _region_for_box(box: BBox, position: RelPosition, geom: TableGeometry) -> BBox:
    x0, y0, x1, y1 = box.min_x, box.min_y, box.max_x, box.max_y
    w, h = box.width, box.height
    r = geom.reach
    # region extents floor on the transverse axis, so stick-thin anchors
    # (bars, an assembled 'i') still project usable neighborhoods
    rw = r * max(w, 0.6 * h)
    rh = r * max(h, 0.6 * w)
    mid = (y0 + y1) / 2.0
    band = mid - geom.script_band * h / 2.0  # Right / script boundary (upper)
    band_lo = mid + geom.script_band * h / 2.0
    if position is RelPosition.LEFT:
        return BBox(x0 - rw, y0, x0, y1)
    if position is RelPosition.RIGHT:
        return BBox(x1, y0, x1 + rw, y1)
    if position is RelPosition.ABOVE:
        return BBox(x0, y0 - rh, x1, y0)
    if position is RelPosition.BELOW:
        return BBox(x0, y1, x1, y1 + rh)
    if position is RelPosition.SUPERSCRIPT:
        return BBox(x1, band - rh, x1 + rw, band)
    if position is RelPosition.SUBSCRIPT:
        return BBox(x1, band_lo, x1 + rw, band_lo + rh)
    if position is RelPosition.UPPER_LEFT:
        return BBox(x0 - rw, y0 - rh, x0, y0)
    if position is RelPosition.LOWER_LEFT:
        return BBox(x0 - rw, y1, x0, y1 + rh)
    if position is RelPosition.INSIDE:
        inset = min(geom.inset, 0.5)
        return BBox(x0 + inset * w, y0 + inset * h, x1 - inset * w, y1 - inset * h)
    raise StructureError(f"unknown position {position!r}")


def position_region(anchor: SymbolInstance, position: RelPosition,
                    geometry: TableGeometry | None = None) -> BBox:
    """Region around the anchor in which a symbol occupies `position`."""
    return _region_for_box(anchor.bbox, position, geometry or TableGeometry())


def place_symbol(sym: SymbolInstance, anchors: list[SymbolInstance],
                 table: PositionTable,
                 scene_diagonal: float | None = None) -> PlacementCandidate | None:
    """Best (anchor, position) by NP = P * k.

    Ties break by higher P, then earlier anchor in the given (reading)
    order, then position enum order. Returns None when every NP is 0.
    Degenerate boxes are inflated by epsilon_box * scene diagonal first.
    """
    if not anchors:
        return None
    geom = table.geometry
    if scene_diagonal is None:
        scene = sym.bbox
        for a in anchors:
            scene = scene.union(a.bbox)
        scene_diagonal = scene.diagonal
    eps = max(geom.epsilon_box * scene_diagonal, 1e-9)
    placed = inflate_bbox(sym.bbox, eps)

    best: PlacementCandidate | None = None
    best_key = None
    for ai, anchor in enumerate(anchors):
        abox = inflate_bbox(anchor.bbox, eps)
        for position in RelPosition:
            region = _region_for_box(abox, position, geom)
            p = overlap_percent(placed, region)
            k = table.coefficient(anchor.label, position)
            score = p * k
            key = (-score, -p, ai, POSITION_ORDER[position])
            if best_key is None or key < best_key:
                best_key = key
                best = PlacementCandidate(anchor.id, position, p, k, score)
    if best is None or best.score == 0.0:
        return None
    return best


# ---------------------------------------------------------------------------
# Reconstruction: heuristic rule engine


def _sorted_rules(rules: list[HeuristicRule]) -> list[HeuristicRule]:
    return sorted(rules, key=lambda r: (-r.priority, r.rule_id))


def _find_match(rule: HeuristicRule, instances: list[SymbolInstance]) -> list[int] | None:
    """First component assignment (in reading order) satisfying the rule."""
    slots = [
        [i for i, inst in enumerate(instances) if pattern_matches(pat, inst.label)]
        for pat in rule.components
    ]
    if any(not s for s in slots):
        return None
    n_slots = len(slots)
    assignment: list[int] = []
    used: set[int] = set()

    def check_predicates(upto: int) -> bool:
        for pred in rule.predicates:
            if pred.first <= upto and pred.second <= upto:
                a = instances[assignment[pred.first]].bbox
                b = instances[assignment[pred.second]].bbox
                if not predicate_holds(pred.name, a, b, pred.threshold):
                    return False
        return True

    def descend(slot: int) -> bool:
        for idx in slots[slot]:
            if idx in used:
                continue
            assignment.append(idx)
            used.add(idx)
            if check_predicates(slot) and (slot + 1 == n_slots or descend(slot + 1)):
                return True
            assignment.pop()
            used.discard(idx)
        return False

    return assignment if descend(0) else None


def reconstruct(strokes: list[RecognizedStroke],
                rules: list[HeuristicRule]) -> list[SymbolInstance]:
    """Assemble multi-stroke symbols; greedy highest-priority-first.

    Iterates rule application to a fixed point; each stroke ends up in
    exactly one SymbolInstance. A rule base that keeps firing past
    2 * stroke count passes raises ReconstructionError naming the rules
    active in the final pass.
    """
    ordered = sorted(strokes, key=lambda s: _reading_key(s.bbox, s.label, s.stroke_id))
    instances = [
        SymbolInstance(s.stroke_id, s.label, (s.stroke_id,), s.bbox, s.confidence)
        for s in ordered
    ]
    if not rules:
        return instances
    active = _sorted_rules(rules)
    cap = max(2 * len(strokes), 2)
    fresh = 0
    for _pass in range(cap + 1):
        fired: list[str] = []
        for rule in active:
            while True:
                match = _find_match(rule, instances)
                if match is None:
                    break
                if rule.kind == "rewrite":
                    target = instances[match[rule.target]]
                    if target.label == rule.result:
                        break  # no-op rewrite: already at fixed point
                    instances[match[rule.target]] = replace(target, label=rule.result)
                else:
                    parts = [instances[i] for i in match]
                    bbox = parts[0].bbox
                    for part in parts[1:]:
                        bbox = bbox.union(part.bbox)
                    stroke_ids = tuple(
                        sid for part in sorted(parts, key=lambda p: _reading_key(p.bbox, p.label, p.id))
                        for sid in part.stroke_ids
                    )
                    merged = SymbolInstance(
                        f"m{fresh}", rule.result, stroke_ids, bbox,
                        min(p.confidence for p in parts),
                    )
                    fresh += 1
                    instances = [inst for i, inst in enumerate(instances) if i not in set(match)]
                    instances.append(merged)
                    instances.sort(key=lambda p: _reading_key(p.bbox, p.label, p.id))
                fired.append(rule.rule_id)
        if not fired:
            return instances
        if _pass == cap:
            names = ", ".join(sorted(set(fired)))
            raise ReconstructionError(
                f"rule base did not reach a fixed point within {cap} passes; "
                f"rules still firing: {names}"
            )
    return instances


# ---------------------------------------------------------------------------
# Grouping: expression-tree construction


@dataclass
class _Atom:
    bbox: BBox
    tree: ExprNode
    label: str | None  # leaf label; None once composite
    stroke_ids: tuple[str, ...]
    instance_id: str
    confidence: float = 1.0

    @property
    def cx(self) -> float:
        return self.bbox.center[0]

    @property
    def cy(self) -> float:
        return self.bbox.center[1]

    def as_instance(self) -> SymbolInstance:
        return SymbolInstance(self.instance_id, self.label or "#group",
                              self.stroke_ids, self.bbox, self.confidence)


def _atom_key(atom: _Atom):
    return _reading_key(atom.bbox, atom.label or "", atom.instance_id)


def _merge_atoms(atoms: list[_Atom], tree: ExprNode, fresh_id: str) -> _Atom:
    bbox = atoms[0].bbox
    for a in atoms[1:]:
        bbox = bbox.union(a.bbox)
    stroke_ids = tuple(sid for a in atoms for sid in a.stroke_ids)
    return _Atom(bbox, tree, None, stroke_ids, fresh_id,
                 min(a.confidence for a in atoms))


def _contains(outer: BBox, inner: BBox) -> bool:
    # tolerance proportional to the outer box: only genuinely larger,
    # enclosing constructs (roots, bracket groups) qualify
    tol = 0.05 * max(outer.width, outer.height)
    return (
        outer.min_x - tol <= inner.min_x
        and outer.min_y - tol <= inner.min_y
        and inner.max_x <= outer.max_x + tol
        and inner.max_y <= outer.max_y + tol
    )


class _TreeBuilder:
    def __init__(self, table: PositionTable, scene_diagonal: float):
        self.table = table
        self.geom = table.geometry
        self.scene_diag = max(scene_diagonal, 1e-9)
        self._fresh = 0

    def fresh_id(self) -> str:
        self._fresh += 1
        return f"g{self._fresh}"

    def build(self, atoms: list[_Atom]) -> ExprNode:
        atoms = sorted(atoms, key=_atom_key)
        atoms = self._group_brackets(atoms)
        atoms = self._group_fractions(atoms)
        atoms = self._group_big_ops(atoms)
        atoms = self._group_roots(atoms)
        atoms = self._group_scripts(atoms)
        atoms = self._fuse_numbers(atoms)
        atoms.sort(key=_atom_key)
        if not atoms:
            return RowNode(())
        if len(atoms) == 1:
            return atoms[0].tree
        return RowNode(tuple(a.tree for a in atoms))

    # -- step 1: bracket pairs (matched by kind and nesting) ----------------

    def _group_brackets(self, atoms: list[_Atom]) -> list[_Atom]:
        opens = [a for a in atoms if a.label in OPEN_BRACKETS]
        closes = [a for a in atoms if a.label in CLOSE_BRACKETS]
        if not opens and not closes:
            return atoms
        matched: dict[int, int] = {}  # id(open atom) -> id(close atom)
        taken: set[int] = set()
        pairs: list[tuple[_Atom, _Atom]] = []
        for close in sorted(closes, key=_atom_key):
            kind = _BRACKET_KIND[close.label]
            best = None
            for opn in opens:
                if id(opn) in taken or _BRACKET_KIND[opn.label] != kind:
                    continue
                if opn.cx >= close.cx:
                    continue
                y_overlap = min(opn.bbox.max_y, close.bbox.max_y) - max(
                    opn.bbox.min_y, close.bbox.min_y
                )
                if y_overlap <= 0.0:
                    continue
                if best is None or opn.cx > best.cx:
                    best = opn
            if best is None:
                raise StructureError(
                    f"unmatched closing bracket {close.label!r} (symbol {close.instance_id})"
                )
            taken.add(id(best))
            pairs.append((best, close))
        orphans = [o for o in opens if id(o) not in taken]
        if orphans:
            o = orphans[0]
            raise StructureError(
                f"unmatched opening bracket {o.label!r} (symbol {o.instance_id})"
            )

        working = list(atoms)
        # innermost (narrowest) pairs first so outer content sees inner groups
        for opn, close in sorted(pairs, key=lambda pc: pc[1].cx - pc[0].cx):
            lo, hi = opn.cx, close.cx
            top = min(opn.bbox.min_y, close.bbox.min_y)
            bottom = max(opn.bbox.max_y, close.bbox.max_y)
            margin = 0.1 * (bottom - top)
            content = [
                a for a in working
                if a is not opn and a is not close
                and lo < a.cx < hi and top - margin <= a.cy <= bottom + margin
            ]
            child = self.build(content)
            group = _merge_atoms([opn, *content, close],
                                 GroupNode(_BRACKET_KIND[opn.label], child),
                                 self.fresh_id())
            consumed = {id(opn), id(close)} | {id(a) for a in content}
            working = [a for a in working if id(a) not in consumed]
            working.append(group)
            working.sort(key=_atom_key)
        return working

    # -- step 2: fraction bars (widest first) --------------------------------

    def _fraction_split(self, bar: _Atom, atoms: list[_Atom]):
        tol = 0.05 * bar.bbox.width
        lo, hi = bar.bbox.min_x - tol, bar.bbox.max_x + tol
        above, below = [], []
        for a in atoms:
            if a is bar or not lo <= a.cx <= hi:
                continue
            if _contains(a.bbox, bar.bbox):
                continue  # an enclosing construct, not fraction content
            if a.cy < bar.cy:
                above.append(a)
            elif a.cy > bar.cy:
                below.append(a)
        return above, below

    def _group_fractions(self, atoms: list[_Atom]) -> list[_Atom]:
        working = list(atoms)
        while True:
            bars = [
                (a, self._fraction_split(a, working))
                for a in working
                if a.label == FRACTION_BAR
            ]
            bars = [(a, ab) for a, ab in bars if ab[0] and ab[1]]
            if not bars:
                return working
            bar, (above, below) = max(bars, key=lambda b: b[0].bbox.width)
            numerator = self.build(above)
            denominator = self.build(below)
            fraction = _merge_atoms([*above, bar, *below],
                                    FractionNode(numerator, denominator),
                                    self.fresh_id())
            consumed = {id(bar)} | {id(a) for a in above + below}
            working = [a for a in working if id(a) not in consumed]
            working.append(fraction)
            working.sort(key=_atom_key)

    # -- step 3: big operators (claim limits above/below, body to the right) -

    def _group_big_ops(self, atoms: list[_Atom]) -> list[_Atom]:
        working = list(atoms)
        while True:
            ops = [a for a in working if a.label in BIG_OP_LABELS]
            if not ops:
                return working
            op = min(ops, key=_atom_key)  # leftmost first
            box = op.bbox
            # limits may be wider than the operator glyph (an ∫ is narrow)
            pad = max(0.25 * box.width, 0.5 * box.height)
            upper, lower = [], []
            for a in working:
                if a is op or not box.min_x - pad <= a.cx <= box.max_x + pad:
                    continue
                if _contains(a.bbox, box):
                    continue
                if a.cy < box.min_y + 0.15 * box.height:
                    upper.append(a)
                elif a.cy > box.max_y - 0.15 * box.height:
                    lower.append(a)
            claimed = {id(a) for a in upper + lower}
            rest = [
                a for a in working
                if a is not op and id(a) not in claimed and a.cx > box.max_x
            ]
            rest.sort(key=_atom_key)
            body: list[_Atom] = []
            for a in rest:
                if a.label == "=":  # the body runs to the next relation
                    break
                body.append(a)
            if not body:
                raise StructureError(
                    f"big operator {op.label!r} (symbol {op.instance_id}) has no body"
                )
            node = BigOpNode(
                BIG_OP_LABELS[op.label or ""],
                self.build(body),
                lower=self.build(lower) if lower else None,
                upper=self.build(upper) if upper else None,
            )
            merged = _merge_atoms([op, *upper, *lower, *body], node, self.fresh_id())
            consumed = {id(op)} | claimed | {id(a) for a in body}
            working = [a for a in working if id(a) not in consumed]
            working.append(merged)
            working.sort(key=_atom_key)

    # -- step 4: roots claim inside content (largest first) ------------------

    def _group_roots(self, atoms: list[_Atom]) -> list[_Atom]:
        working = list(atoms)
        while True:
            roots = [a for a in working if a.label == ROOT_LABEL]
            if not roots:
                return working
            root = max(roots, key=lambda a: (a.bbox.area, _atom_key(a)))
            inside = _region_for_box(root.bbox, RelPosition.INSIDE, self.geom)
            degree_region = _region_for_box(root.bbox, RelPosition.UPPER_LEFT, self.geom)
            content = [
                a for a in working
                if a is not root and inside.contains_point(a.cx, a.cy)
            ]
            if not content:
                raise StructureError(
                    f"root (symbol {root.instance_id}) has an empty radicand"
                )
            degree = [
                a for a in working
                if a is not root and a not in content
                and degree_region.contains_point(a.cx, a.cy)
            ]
            node = RootNode(
                self.build(content),
                degree=self.build(degree) if degree else None,
            )
            merged = _merge_atoms([*degree, root, *content], node, self.fresh_id())
            consumed = {id(root)} | {id(a) for a in content + degree}
            working = [a for a in working if id(a) not in consumed]
            working.append(merged)
            working.sort(key=_atom_key)

    # -- step 5: scripts attach via SuperScript/SubScript placements ---------

    def _script_member_fits(self, atom: _Atom, base: _Atom, slot: str) -> bool:
        # a script member is meaningfully smaller than its base and stays
        # on the script side of the base's band boundary; decimal marks
        # belong to numbers, never to scripts
        if atom.label in (".", ","):
            return False
        if atom.bbox.height > self.geom.script_ratio * base.bbox.height:
            return False
        band = self.geom.script_band * base.bbox.height / 2.0
        mid = base.cy
        if slot == "sup":
            return atom.cy < mid - band
        return atom.cy > mid + band

    @staticmethod
    def _adjacent_anchor(anchor: _Atom, atom: _Atom) -> bool:
        # scripts hang off a nearby base to their left; distant or enclosing
        # boxes (a whole big-operator group, say) are not script anchors
        gap = atom.bbox.min_x - anchor.bbox.max_x
        lim = 1.5 * min(anchor.bbox.height, atom.bbox.height)
        if lim <= 0.0:
            lim = 1.5 * min(anchor.bbox.width, atom.bbox.width)
        return -lim <= gap <= lim

    def _script_candidate(self, atom: _Atom, placed, anchor_index: list[int],
                          atoms: list[_Atom], instances) -> tuple[int, str] | None:
        """Best direct script attachment: argmax NP over SUPER/SUB regions."""
        eps = max(self.geom.epsilon_box * self.scene_diag, 1e-9)
        pbox = inflate_bbox(atom.bbox, eps)
        best_key = None
        best: tuple[int, str] | None = None
        for order, i in enumerate(anchor_index):
            abox = inflate_bbox(atoms[i].bbox, eps)
            for position, slot in ((RelPosition.SUPERSCRIPT, "sup"),
                                   (RelPosition.SUBSCRIPT, "sub")):
                if not self._script_member_fits(atom, atoms[i], slot):
                    continue
                region = _region_for_box(abox, position, self.geom)
                p = overlap_percent(pbox, region)
                k = self.table.coefficient(instances[i].label, position)
                score = p * k
                if score <= 0.0 or p < self.geom.script_min_overlap:
                    continue
                key = (-score, -p, order, POSITION_ORDER[position])
                if best_key is None or key < best_key:
                    best_key = key
                    best = (i, slot)
        return best

    def _group_scripts(self, atoms: list[_Atom]) -> list[_Atom]:
        if len(atoms) < 2:
            return atoms
        atoms = sorted(atoms, key=_atom_key)
        instances = [a.as_instance() for a in atoms]
        # group key: (base index, "sup"/"sub") -> member indices
        groups: dict[tuple[int, str], list[int]] = {}
        member_of: dict[int, tuple[int, str]] = {}

        for j, atom in enumerate(atoms):
            anchor_index = [
                i for i in range(len(atoms))
                if i != j and self._adjacent_anchor(atoms[i], atom)
            ]
            if not anchor_index:
                continue
            direct = self._script_candidate(atom, instances[j], anchor_index,
                                            atoms, instances)
            if direct is not None:
                ai, slot = direct
                base = member_of[ai][0] if ai in member_of else ai
                slot = member_of[ai][1] if ai in member_of else slot
                if self._script_member_fits(atom, atoms[base], slot):
                    groups.setdefault((base, slot), []).append(j)
                    member_of[j] = (base, slot)
                    continue
            # no direct fit: a trailing member of a wide script joins through
            # its neighbor's best placement (the chain rule)
            anchors = [instances[i] for i in anchor_index]
            best = place_symbol(instances[j], anchors, self.table, self.scene_diag)
            if best is None:
                continue
            ai = anchor_index[[inst.id for inst in anchors].index(best.anchor_id)]
            if ai in member_of and best.position in (
                    RelPosition.RIGHT, RelPosition.SUPERSCRIPT, RelPosition.SUBSCRIPT):
                base, slot = member_of[ai]
                if self._script_member_fits(atom, atoms[base], slot):
                    groups.setdefault((base, slot), []).append(j)
                    member_of[j] = (base, slot)
            elif best.position in (RelPosition.SUPERSCRIPT, RelPosition.SUBSCRIPT):
                slot = "sup" if best.position is RelPosition.SUPERSCRIPT else "sub"
                if self._script_member_fits(atom, atoms[ai], slot):
                    groups.setdefault((ai, slot), []).append(j)
                    member_of[j] = (ai, slot)

        if not groups:
            return atoms
        out: list[_Atom] = []
        for i, atom in enumerate(atoms):
            if i in member_of:
                continue
            sup = groups.get((i, "sup"))
            sub = groups.get((i, "sub"))
            if not sup and not sub:
                out.append(atom)
                continue
            members = [atoms[m] for m in (sup or []) + (sub or [])]
            node = ScriptsNode(
                atom.tree,
                superscript=self.build([atoms[m] for m in sup]) if sup else None,
                subscript=self.build([atoms[m] for m in sub]) if sub else None,
            )
            out.append(_merge_atoms([atom, *members], node, self.fresh_id()))
        return out

    # -- step 6: adjacent digits and decimal marks fuse into numbers ---------

    def _fuse_numbers(self, atoms: list[_Atom]) -> list[_Atom]:
        atoms = sorted(atoms, key=_atom_key)
        out: list[_Atom] = []
        run: list[_Atom] = []

        def run_adjacent(prev: _Atom, nxt: _Atom) -> bool:
            ref = max(prev.bbox.height, nxt.bbox.height)
            if ref <= 0.0:
                ref = max(prev.bbox.width, nxt.bbox.width, 1e-9)
            gap = nxt.bbox.min_x - prev.bbox.max_x
            return -0.3 * ref <= gap <= 0.5 * ref

        def flush() -> None:
            if not run:
                return
            # separators only between digits: peel leading/trailing marks
            first = 0
            last = len(run)
            while first < last and run[first].label not in "0123456789":
                out.append(run[first])
                first += 1
            while last > first and run[last - 1].label not in "0123456789":
                last -= 1
            core = run[first:last]
            tail = run[last:]
            if core:
                if len(core) == 1:
                    out.append(_merge_atoms(core, NumberNode(core[0].label or ""),
                                            self.fresh_id()))
                else:
                    value = "".join(a.label or "" for a in core)
                    out.append(_merge_atoms(core, NumberNode(value), self.fresh_id()))
            out.extend(tail)
            run.clear()

        for atom in atoms:
            if atom.label in NUMBER_PARTS:
                if run and not run_adjacent(run[-1], atom):
                    flush()
                run.append(atom)
            else:
                flush()
                out.append(atom)
        flush()
        return out


def group_symbols(instances: list[SymbolInstance], table: PositionTable) -> ExprNode:
    """Build the expression tree from reconstructed symbol instances."""
    if not instances:
        return RowNode(())
    scene = instances[0].bbox
    for inst in instances[1:]:
        scene = scene.union(inst.bbox)
    atoms = [
        _Atom(inst.bbox, _leaf_node(inst.label), inst.label,
              inst.stroke_ids, inst.id, inst.confidence)
        for inst in instances
    ]
    return _TreeBuilder(table, scene.diagonal).build(atoms)


def _leaf_node(label: str) -> ExprNode:
    if label in "0123456789":
        return NumberNode(label)
    return SymbolNode(label)


@dataclass
class AnalysisResult:
    symbols: list[SymbolInstance]
    tree: ExprNode
    diagnostics: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def analyze(strokes: list[RecognizedStroke], table: PositionTable,
            rules: list[HeuristicRule]) -> AnalysisResult:
    """Full pipeline: reconstruct, place, group.

    Pure in the stroke multiset (input order never matters). Errors become
    diagnostics plus a flat reading-order row, never a lost session.
    """
    if not strokes:
        return AnalysisResult([], RowNode(()))
    diagnostics: list[str] = []
    try:
        instances = reconstruct(strokes, rules)
    except ReconstructionError as exc:
        diagnostics.append(str(exc))
        ordered = sorted(strokes, key=lambda s: _reading_key(s.bbox, s.label, s.stroke_id))
        instances = [
            SymbolInstance(s.stroke_id, s.label, (s.stroke_id,), s.bbox, s.confidence)
            for s in ordered
        ]
    try:
        tree = group_symbols(instances, table)
    except StructureError as exc:
        diagnostics.append(str(exc))
        tree = RowNode(tuple(_leaf_node(inst.label) for inst in instances))
    return AnalysisResult(instances, tree, diagnostics)
