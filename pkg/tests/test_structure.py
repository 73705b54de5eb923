import itertools
import random

import pytest

from mathink.expr import (
    BigOpNode,
    FractionNode,
    GroupNode,
    NumberNode,
    RowNode,
    ScriptsNode,
    SymbolNode,
)
from mathink.ink import BBox
from mathink.knowledge import (
    RelPosition,
    default_heuristic_rules,
    default_position_table,
)
from mathink.structure import (
    AnalysisResult,
    PlacementCandidate,
    RecognizedStroke,
    StructureError,
    SymbolInstance,
    analyze,
    group_symbols,
    inflate_bbox,
    overlap_percent,
    place_symbol,
    position_region,
    reconstruct,
)


def sym(label, x0, y0, x1, y1, sid=None):
    sid = sid or f"{label}-{x0}-{y0}"
    return SymbolInstance(sid, label, (sid,), BBox(x0, y0, x1, y1), 1.0)


def rec(label, x0, y0, x1, y1, sid):
    return RecognizedStroke(sid, label, BBox(x0, y0, x1, y1), 1.0)


class TestOverlapPercent:
    def test_fully_inside(self):
        assert overlap_percent(BBox(1, 1, 2, 2), BBox(0, 0, 3, 3)) == 100.0

    def test_disjoint(self):
        assert overlap_percent(BBox(0, 0, 1, 1), BBox(2, 2, 3, 3)) == 0.0

    def test_half_overlap_matches_grid_oracle(self):
        placed, region = BBox(0, 0, 2, 2), BBox(1, 0, 3, 2)
        got = overlap_percent(placed, region)
        assert got == 50.0
        # grid-sampling area oracle, 1000 x 1000 cells
        n = 1000
        hits = 0
        for i in range(n):
            x = placed.min_x + (i + 0.5) / n * placed.width
            inside_x = region.min_x <= x <= region.max_x
            for j in range(n):
                y = placed.min_y + (j + 0.5) / n * placed.height
                if inside_x and region.min_y <= y <= region.max_y:
                    hits += 1
        estimate = 100.0 * hits / (n * n)
        assert abs(got - estimate) <= 0.5

    def test_degenerate_placed_rejected(self):
        with pytest.raises(StructureError):
            overlap_percent(BBox(0, 0, 0, 1), BBox(0, 0, 1, 1))


class TestPositionRegion:
    def test_right_region_definitional(self):
        anchor = sym("x", 0, 0, 1, 1)
        region = position_region(anchor, RelPosition.RIGHT)
        assert region == BBox(1, 0, 2, 1)  # abuts right edge, same height

    def test_inside_region_is_inset(self):
        from mathink.knowledge import TableGeometry

        anchor = sym("√", 0, 0, 10, 10)
        region = position_region(anchor, RelPosition.INSIDE, TableGeometry(inset=0.1))
        assert region == BBox(1, 1, 9, 9)

    def test_left_right_disjoint_on_random_anchors(self):
        rnd = random.Random(31)
        for _ in range(100):
            x0, y0 = rnd.uniform(-5, 5), rnd.uniform(-5, 5)
            anchor = sym("a", x0, y0, x0 + rnd.uniform(0.1, 4), y0 + rnd.uniform(0.1, 4))
            left = position_region(anchor, RelPosition.LEFT)
            right = position_region(anchor, RelPosition.RIGHT)
            assert left.max_x <= right.min_x  # separated by the anchor width


class TestPlaceSymbol:
    def test_forbidden_position_scores_zero(self):
        table = default_position_table()
        # content perfectly in the Inside region of a digit: k = 0 there,
        # so despite P = 100 every NP is 0 and no candidate is returned
        anchor = sym("5", 0, 0, 10, 10)
        placed = sym("1", 4, 4, 6, 6)
        assert place_symbol(placed, [anchor], table) is None
        # the same geometry against a root anchor (Inside required) wins
        root_anchor = sym("√", 0, 0, 10, 10, sid="r")
        best = place_symbol(placed, [root_anchor], table)
        assert best is not None
        assert best.position is RelPosition.INSIDE
        assert best.coefficient == 1.5
        assert best.score == best.overlap * 1.5

    def test_required_coefficient_beats_allowed(self):
        # NP = 60 * 1.5 = 90 beats NP = 80 * 1 = 80
        assert 60 * 1.5 > 80 * 1.0

    def test_random_scenes_match_bruteforce(self):
        from mathink.knowledge import POSITION_ORDER, TableGeometry
        from mathink.structure import _region_for_box

        rnd = random.Random(17)
        table = default_position_table()
        labels = list("0123459abxy") + ["Σ", "√", "(", ")", "-"]
        for _ in range(100):
            anchors = []
            for i in range(4):
                x0, y0 = rnd.uniform(0, 8), rnd.uniform(0, 8)
                anchors.append(
                    sym(rnd.choice(labels), x0, y0, x0 + rnd.uniform(0.2, 2),
                        y0 + rnd.uniform(0.2, 2), sid=f"a{i}")
                )
            x0, y0 = rnd.uniform(0, 8), rnd.uniform(0, 8)
            placed = sym(rnd.choice(labels), x0, y0, x0 + rnd.uniform(0.2, 2),
                         y0 + rnd.uniform(0.2, 2), sid="p")
            got = place_symbol(placed, anchors, table)

            # exhaustive enumeration oracle
            scene = placed.bbox
            for a in anchors:
                scene = scene.union(a.bbox)
            eps = max(table.geometry.epsilon_box * scene.diagonal, 1e-9)
            pbox = inflate_bbox(placed.bbox, eps)
            candidates = []
            for ai, anchor in enumerate(anchors):
                abox = inflate_bbox(anchor.bbox, eps)
                for pos in RelPosition:
                    region = _region_for_box(abox, pos, table.geometry)
                    p = overlap_percent(pbox, region)
                    k = table.coefficient(anchor.label, pos)
                    candidates.append((p * k, p, ai, POSITION_ORDER[pos], anchor.id, pos))
            best = min(candidates, key=lambda c: (-c[0], -c[1], c[2], c[3]))
            if best[0] == 0.0:
                assert got is None
            else:
                assert got is not None
                assert (got.score, got.overlap, got.anchor_id, got.position) == (
                    best[0], best[1], best[4], best[5])
                if got.coefficient == 0.0:
                    raise AssertionError("selected a forbidden-position candidate")

    def test_no_anchors(self):
        table = default_position_table()
        assert place_symbol(sym("x", 0, 0, 1, 1), [], table) is None


class TestReconstruct:
    def test_equals_from_stacked_bars(self):
        strokes = [
            rec("-", 0.0, 0.0, 1.0, 0.02, "b1"),
            rec("-", 0.05, 0.4, 1.05, 0.42, "b2"),
        ]
        out = reconstruct(strokes, default_heuristic_rules())
        assert len(out) == 1
        assert out[0].label == "="
        assert sorted(out[0].stroke_ids) == ["b1", "b2"]

    def test_i_from_dot_above_bar(self):
        strokes = [
            rec(".", 0.45, 0.0, 0.55, 0.1, "dot"),
            rec("|", 0.48, 0.3, 0.52, 1.3, "bar"),
        ]
        out = reconstruct(strokes, default_heuristic_rules())
        assert [o.label for o in out] == ["i"]

    def test_plus_from_crossed_bars(self):
        strokes = [
            rec("-", 0.0, 0.5, 1.0, 0.52, "h"),
            rec("|", 0.48, 0.0, 0.52, 1.0, "v"),
        ]
        out = reconstruct(strokes, default_heuristic_rules())
        assert [o.label for o in out] == ["+"]

    def test_abbreviation_after_i_assembly(self):
        # s i n with the i built from its two strokes first
        strokes = [
            rec("s", 0.0, 0.2, 0.5, 1.0, "s"),
            rec(".", 0.75, 0.0, 0.8, 0.06, "dot"),
            rec("|", 0.72, 0.25, 0.78, 1.0, "bar"),
            rec("n", 1.0, 0.25, 1.5, 1.0, "n"),
        ]
        out = reconstruct(strokes, default_heuristic_rules())
        assert [o.label for o in out] == ["sin"]
        assert len(out[0].stroke_ids) == 4

    def test_empty_rules_identity(self):
        strokes = [rec("a", 0, 0, 1, 1, "s1"), rec("b", 2, 0, 3, 1, "s2")]
        out = reconstruct(strokes, [])
        assert [o.label for o in out] == ["a", "b"]
        assert [o.stroke_ids for o in out] == [("s1",), ("s2",)]

    def test_every_stroke_in_exactly_one_instance(self):
        strokes = [
            rec("-", 0.0, 0.0, 1.0, 0.02, "b1"),
            rec("-", 0.05, 0.4, 1.05, 0.42, "b2"),
            rec("x", 2.0, 0.0, 2.8, 1.0, "x1"),
        ]
        out = reconstruct(strokes, default_heuristic_rules())
        seen = sorted(sid for inst in out for sid in inst.stroke_ids)
        assert seen == ["b1", "b2", "x1"]

    def test_rewrite_rule(self):
        from mathink.knowledge import HeuristicRule, SpatialPredicate

        rules = [
            HeuristicRule(
                "bar-between-digits-is-one",
                ("1", "|"),
                (SpatialPredicate(0, 1, "adjacent-right", 1.2),),
                result="1",
                priority=10,
                kind="rewrite",
                target=1,
            )
        ]
        strokes = [
            rec("1", 0.0, 0.0, 0.4, 1.0, "d1"),
            rec("|", 0.6, 0.0, 0.64, 1.0, "v"),
        ]
        out = reconstruct(strokes, rules)
        assert [o.label for o in out] == ["1", "1"]
        assert len(out) == 2  # rewrite does not consume

    def test_cycle_guard_names_rules(self):
        from mathink.knowledge import HeuristicRule, SpatialPredicate

        # a -> b and b -> a rewrite loop never reaches a fixed point
        rules = [
            HeuristicRule("flip-ab", ("a",), (), result="b", priority=2, kind="rewrite"),
            HeuristicRule("flip-ba", ("b",), (), result="a", priority=1, kind="rewrite"),
        ]
        strokes = [rec("a", 0, 0, 1, 1, "s1")]
        from mathink.structure import ReconstructionError

        with pytest.raises(ReconstructionError, match="flip-ab"):
            reconstruct(strokes, rules)


class TestGrouping:
    table = default_position_table()

    def test_fraction(self):
        instances = [
            sym("a", 0.2, 0.0, 0.8, 0.8),
            sym("-", 0.0, 1.0, 1.0, 1.02),
            sym("b", 0.2, 1.2, 0.8, 2.0),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == FractionNode(SymbolNode("a"), SymbolNode("b"))

    def test_superscript(self):
        instances = [
            sym("x", 0.0, 0.0, 1.0, 1.0),
            sym("2", 1.1, -0.45, 1.7, 0.15),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == ScriptsNode(SymbolNode("x"), superscript=NumberNode("2"))

    def test_subscript(self):
        instances = [
            sym("x", 0.0, 0.0, 1.0, 1.0),
            sym("2", 1.1, 0.85, 1.7, 1.45),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == ScriptsNode(SymbolNode("x"), subscript=NumberNode("2"))

    def test_number_fusion(self):
        instances = [
            sym("1", 0.0, 0.0, 0.5, 1.0),
            sym(".", 0.6, 0.9, 0.7, 1.0),
            sym("5", 0.8, 0.0, 1.3, 1.0),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == NumberNode("1.5")

    def test_brackets(self):
        instances = [
            sym("(", 0.0, 0.0, 0.2, 1.0),
            sym("a", 0.4, 0.1, 1.0, 0.9),
            sym(")", 1.2, 0.0, 1.4, 1.0),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == GroupNode("paren", SymbolNode("a"))

    def test_unmatched_bracket_raises(self):
        instances = [
            sym("(", 0.0, 0.0, 0.2, 1.0),
            sym("a", 0.4, 0.1, 1.0, 0.9),
        ]
        with pytest.raises(StructureError, match="unmatched"):
            group_symbols(instances, self.table)

    def test_big_op_with_limits(self):
        instances = [
            sym("n", 0.3, -0.8, 0.7, -0.2),  # upper limit
            sym("Σ", 0.0, 0.0, 1.0, 1.4),
            sym("i", 0.3, 1.6, 0.7, 2.2),  # lower limit
            sym("x", 1.4, 0.3, 2.2, 1.1),  # body
        ]
        tree = group_symbols(instances, self.table)
        assert tree == BigOpNode(
            "sum", SymbolNode("x"), lower=SymbolNode("i"), upper=SymbolNode("n")
        )

    def test_root_inside(self):
        instances = [
            sym("√", 0.0, 0.0, 2.0, 1.4),
            sym("x", 0.8, 0.4, 1.6, 1.2),
        ]
        tree = group_symbols(instances, self.table)
        from mathink.expr import RootNode

        assert tree == RootNode(SymbolNode("x"))

    def test_row_reading_order(self):
        instances = [
            sym("b", 2.0, 0.0, 3.0, 1.0),
            sym("a", 0.0, 0.0, 1.0, 1.0),
        ]
        tree = group_symbols(instances, self.table)
        assert tree == RowNode((SymbolNode("a"), SymbolNode("b")))


class TestAnalyze:
    table = default_position_table()
    rules = default_heuristic_rules()

    def test_empty(self):
        result = analyze([], self.table, self.rules)
        assert result.tree == RowNode(())
        assert result.ok

    def test_input_order_invariance(self):
        strokes = [
            rec("a", 0.2, 0.0, 0.8, 0.8, "s1"),
            rec("-", 0.0, 1.0, 1.0, 1.02, "s2"),
            rec("b", 0.2, 1.2, 0.8, 2.0, "s3"),
            rec("+", 1.5, 0.4, 2.1, 1.0, "s4"),
            rec("c", 2.4, 0.3, 3.0, 1.1, "s5"),
        ]
        trees = set()
        for perm in itertools.permutations(strokes):
            result = analyze(list(perm), self.table, self.rules)
            trees.add(result.tree)
        assert len(trees) == 1
        tree = trees.pop()
        assert tree == RowNode(
            (FractionNode(SymbolNode("a"), SymbolNode("b")), SymbolNode("+"),
             SymbolNode("c"))
        )

    def test_structural_error_degrades_to_flat_row(self):
        strokes = [
            rec("(", 0.0, 0.0, 0.2, 1.0, "s1"),
            rec("a", 0.4, 0.1, 1.0, 0.9, "s2"),
        ]
        result = analyze(strokes, self.table, self.rules)
        assert not result.ok
        assert result.tree == RowNode((SymbolNode("("), SymbolNode("a")))
        assert "unmatched" in result.diagnostics[0]

    def test_partition_property(self):
        strokes = [
            rec("-", 0.0, 0.0, 1.0, 0.02, "b1"),
            rec("-", 0.05, 0.4, 1.05, 0.42, "b2"),
            rec("5", 2.0, 0.0, 2.6, 1.0, "d1"),
        ]
        result = analyze(strokes, self.table, self.rules)
        seen = sorted(sid for inst in result.symbols for sid in inst.stroke_ids)
        assert seen == ["b1", "b2", "d1"]


def test_reanalysis_is_idempotent():
    # analyzing the same symbol multiset twice yields identical trees
    table = default_position_table()
    rules = default_heuristic_rules()
    strokes = [
        rec("a", 0.2, 0.0, 0.8, 0.8, "s1"),
        rec("-", 0.0, 1.0, 1.0, 1.02, "s2"),
        rec("b", 0.2, 1.2, 0.8, 2.0, "s3"),
    ]
    first = analyze(strokes, table, rules)
    second = analyze(strokes, table, rules)
    assert first.tree == second.tree
    assert [i.label for i in first.symbols] == [i.label for i in second.symbols]
