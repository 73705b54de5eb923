import numpy as np

from mathink.corpus import (
    JitterParams,
    STROKE_CLASSES,
    corpus_from_dict,
    corpus_to_dict,
    expression_from_dict,
    expression_to_dict,
    generate_corpus,
)
from mathink.ink import bbox_of
from mathink.knowledge import default_heuristic_rules, default_position_table
from mathink.structure import RecognizedStroke, analyze


def test_forty_stroke_classes():
    assert len(STROKE_CLASSES) == 40


def test_deterministic_under_seed():
    a = generate_corpus(seed=3, n_expressions=10)
    b = generate_corpus(seed=3, n_expressions=10)
    assert [expression_to_dict(x) for x in a] == [expression_to_dict(x) for x in b]


def test_different_seeds_differ():
    a = generate_corpus(seed=3, n_expressions=10)
    b = generate_corpus(seed=4, n_expressions=10)
    assert [expression_to_dict(x) for x in a] != [expression_to_dict(x) for x in b]


def test_expression_round_trip():
    exprs = generate_corpus(seed=9, n_expressions=5)
    for e in exprs:
        doc = expression_to_dict(e)
        again = expression_from_dict(doc)
        assert again.stroke_labels == e.stroke_labels
        assert again.tree == e.tree
        assert again.latex == e.latex
        assert again.session.strokes == e.session.strokes


def test_corpus_document_round_trip():
    exprs = generate_corpus(seed=9, n_expressions=4)
    doc = corpus_to_dict(exprs, 9, JitterParams())
    again = corpus_from_dict(doc)
    assert len(again) == 4
    assert again[0].tree == exprs[0].tree


def test_symbols_partition_strokes():
    for e in generate_corpus(seed=21, n_expressions=20):
        stroke_ids = sorted(s.id for s in e.session.strokes)
        from_symbols = sorted(sid for s in e.symbols for sid in s.stroke_ids)
        assert stroke_ids == from_symbols


def test_all_classes_covered_in_default_corpus():
    exprs = generate_corpus(seed=1, n_expressions=300)
    seen = {label for e in exprs for label in e.stroke_labels.values()}
    assert seen == set(STROKE_CLASSES)


def test_noiseless_strokes_reanalyze_to_golden_tree():
    # pipeline closure: the layout grammar and the analyzer agree exactly
    table = default_position_table()
    rules = default_heuristic_rules()
    for e in generate_corpus(seed=42, n_expressions=60, jitter=JitterParams.none()):
        recognized = [
            RecognizedStroke(s.id, e.stroke_labels[s.id], bbox_of(s))
            for s in e.session.strokes
        ]
        result = analyze(recognized, table, rules)
        assert result.tree == e.tree, e.latex


def test_jitter_bounds_hold():
    jitter = JitterParams()
    exprs = generate_corpus(seed=2, n_expressions=5, jitter=jitter)
    for e in exprs:
        for stroke in e.session.strokes:
            assert len(stroke.points) == jitter.points_per_stroke
            ts = [p.t for p in stroke.points]
            assert ts == sorted(ts)


def test_zero_jitter_corpus_is_separable():
    # without jitter every class collapses to one feature point, so rule
    # generation alone classifies the training set perfectly
    from mathink.features import SimplifyParams, extract_features
    from mathink.fuzzy import FuzzyModel, accuracy, with_rules_from

    exprs = generate_corpus(seed=8, n_expressions=40, jitter=JitterParams.none())
    labels = sorted({l for e in exprs for l in e.stroke_labels.values()})
    model = FuzzyModel.initial(labels)
    index = {c: i for i, c in enumerate(labels)}
    X, y = [], []
    for e in exprs:
        for s in e.session.strokes:
            X.append(extract_features(s, model.feature_params))
            y.append(index[e.stroke_labels[s.id]])
    import numpy as np

    X, y = np.asarray(X), np.asarray(y)
    trained = with_rules_from(model, X, y)
    assert accuracy(trained, X, y) == 1.0
