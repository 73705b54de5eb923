import math
import random

import numpy as np
import pytest

from mathink.features import SimplifyParams
from mathink.fuzzy import (
    FuzzyModel,
    FuzzyPartition,
    FuzzyRule,
    GaussianMF,
    ModelConfig,
)
from mathink.ink import InkPoint, Stroke


def make_stroke(points, sid="s0", t0=0, dt=10):
    return Stroke(sid, tuple(InkPoint(float(x), float(y), t0 + i * dt)
                             for i, (x, y) in enumerate(points)))


def random_partition(rng: random.Random, dims: int, max_terms: int = 4) -> FuzzyPartition:
    terms = []
    for _ in range(dims):
        row = tuple(
            GaussianMF(rng.uniform(0.0, 1.0), rng.uniform(0.05, 0.5))
            for _ in range(rng.randint(1, max_terms))
        )
        terms.append(row)
    return FuzzyPartition(tuple(terms))


def random_model(rng: random.Random, dims: int, n_classes: int, n_rules: int,
                 inference: str = "minmax") -> FuzzyModel:
    partition = random_partition(rng, dims)
    rules = []
    seen = set()
    for _ in range(n_rules):
        for _attempt in range(50):
            ante = tuple(rng.randrange(len(partition.terms[d])) for d in range(dims))
            if ante not in seen:
                seen.add(ante)
                rules.append(FuzzyRule(ante, rng.randrange(n_classes)))
                break
    labels = [f"c{i}" for i in range(n_classes)]
    if dims % 2 == 0 and dims >= 4:
        params = SimplifyParams(target_vertices=dims // 2)  # validates cleanly
    else:
        params = SimplifyParams()
    model = FuzzyModel(labels, partition, rules, params,
                       ModelConfig(inference=inference))
    return model


def oracle_degree(center: float, sigma: float, x: float) -> float:
    # independently coded Gaussian membership
    return math.exp(-((x - center) ** 2) / (2.0 * sigma**2))


def oracle_scores(model: FuzzyModel, x) -> list[float]:
    """Loop-over-everything forward pass, no numpy, no shared code paths."""
    scores = [0.0] * model.class_count
    for rule in model.rules:
        degrees = []
        for d, t in enumerate(rule.antecedent):
            mf = model.partition.terms[d][t]
            degrees.append(oracle_degree(mf.center, mf.sigma, x[d]))
        if model.config.inference == "product":
            act = 1.0
            for g in degrees:
                act *= g
        else:
            act = min(degrees)
        if act > scores[rule.consequent]:
            scores[rule.consequent] = act
    return scores


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
