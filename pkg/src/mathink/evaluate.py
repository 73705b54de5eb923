"""Batch evaluation: stroke recognition, symbol reconstruction, whole-tree
structural accuracy, and per-stroke recognition latency.

Metric definitions:
  - stroke accuracy: percent of strokes whose predicted class (argmax,
    no reject) equals the labeled class;
  - reconstruction accuracy: among ground-truth symbols whose member
    strokes were all classified correctly, percent reconstructed as one
    instance with the right label and exactly those strokes;
  - structural accuracy: percent of expressions whose analyzed tree
    equals the golden tree exactly;
  - latency: wall time of the features+classify path per stroke.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusExpression
from .features import extract_features
from .fuzzy import FuzzyModel, score_batch
from .ink import bbox_of
from .store import KnowledgeFile
from .structure import RecognizedStroke, analyze


@dataclass
class EvalReport:
    stroke_accuracy: float  # percent
    reconstruction_accuracy: float  # percent, over correctly classified strokes
    structural_accuracy: float  # percent of whole expressions
    mean_latency_ms: float
    p95_latency_ms: float
    n_strokes: int
    n_reconstructable: int
    n_expressions: int
    confusion: dict[tuple[str, str], int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stroke_accuracy": self.stroke_accuracy,
            "reconstruction_accuracy": self.reconstruction_accuracy,
            "structural_accuracy": self.structural_accuracy,
            "mean_latency_ms": self.mean_latency_ms,
            "p95_latency_ms": self.p95_latency_ms,
            "n_strokes": self.n_strokes,
            "n_reconstructable": self.n_reconstructable,
            "n_expressions": self.n_expressions,
            "confusion": [
                {"true": t, "predicted": p, "count": c}
                for (t, p), c in sorted(self.confusion.items())
            ],
        }

    def stroke_accuracy_from_confusion(self) -> float:
        total = sum(self.confusion.values())
        if total == 0:
            return 0.0
        correct = sum(c for (t, p), c in self.confusion.items() if t == p)
        return 100.0 * correct / total


def evaluate(model: FuzzyModel, knowledge: KnowledgeFile,
             expressions: list[CorpusExpression],
             oracle_labels: bool = False) -> EvalReport:
    """Score a labeled expression corpus against the model and knowledge."""
    table = knowledge.effective_table()
    rules = knowledge.effective_rules()


    confusion: dict[tuple[str, str], int] = {}
    latencies: list[float] = []
    n_strokes = correct_strokes = 0
    n_reconstructable = correct_reconstructions = 0
    n_expressions = correct_trees = 0

    for expr in expressions:
        n_expressions += 1
        stroke_ok: dict[str, bool] = {}
        recognized: list[RecognizedStroke] = []
        for stroke in expr.session.strokes:
            truth = expr.stroke_labels[stroke.id]
            if oracle_labels:
                predicted = truth
                latencies.append(0.0)
            else:
                t0 = time.perf_counter()
                features = extract_features(stroke, model.feature_params)
                scores = score_batch(model, np.asarray([features]))[0]
                predicted = model.class_labels[int(scores.argmax())]
                latencies.append((time.perf_counter() - t0) * 1000.0)
            n_strokes += 1
            ok = predicted == truth
            correct_strokes += int(ok)
            stroke_ok[stroke.id] = ok
            confusion[(truth, predicted)] = confusion.get((truth, predicted), 0) + 1
            recognized.append(
                RecognizedStroke(stroke.id, predicted, bbox_of(stroke), 1.0)
            )

        result = analyze(recognized, table, rules)
        by_strokes = {tuple(sorted(inst.stroke_ids)): inst.label
                      for inst in result.symbols}
        for label, stroke_ids in expr.symbols:
            if not all(stroke_ok[sid] for sid in stroke_ids):
                continue
            n_reconstructable += 1
            if by_strokes.get(tuple(sorted(stroke_ids))) == label:
                correct_reconstructions += 1

        if result.tree == expr.tree:
            correct_trees += 1

    lat = np.asarray(latencies) if latencies else np.zeros(1)
    return EvalReport(
        stroke_accuracy=100.0 * correct_strokes / max(n_strokes, 1),
        reconstruction_accuracy=100.0 * correct_reconstructions / max(n_reconstructable, 1),
        structural_accuracy=100.0 * correct_trees / max(n_expressions, 1),
        mean_latency_ms=float(lat.mean()),
        p95_latency_ms=float(np.percentile(lat, 95)),
        n_strokes=n_strokes,
        n_reconstructable=n_reconstructable,
        n_expressions=n_expressions,
        confusion=confusion,
    )
