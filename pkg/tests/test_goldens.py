import random

import pytest

from mathink.ink import BBox
from mathink.knowledge import default_heuristic_rules, default_position_table
from mathink.render import render_latex
from mathink.structure import RecognizedStroke, analyze
from .goldens import GOLDENS

TABLE = default_position_table()
RULES = default_heuristic_rules()


def scene_strokes(spec):
    return [
        RecognizedStroke(f"g{i}", label, BBox(x0, y0, x1, y1))
        for i, (label, x0, y0, x1, y1) in enumerate(spec)
    ]


@pytest.mark.parametrize("name,spec,tree,latex", GOLDENS, ids=[g[0] for g in GOLDENS])
def test_golden_tree_and_latex(name, spec, tree, latex):
    result = analyze(scene_strokes(spec), TABLE, RULES)
    assert result.ok, result.diagnostics
    assert result.tree == tree
    assert render_latex(result.tree) == latex


@pytest.mark.parametrize("name,spec,tree,latex", GOLDENS, ids=[g[0] for g in GOLDENS])
def test_golden_permutation_invariance(name, spec, tree, latex):
    rnd = random.Random(hash(name) & 0xFFFF)
    strokes = scene_strokes(spec)
    for _ in range(5):
        shuffled = strokes[:]
        rnd.shuffle(shuffled)
        result = analyze(shuffled, TABLE, RULES)
        assert result.tree == tree


def test_rendered_goldens_are_distinct():
    rendered = [latex for _, _, _, latex in GOLDENS]
    assert len(set(rendered)) == len(rendered)
