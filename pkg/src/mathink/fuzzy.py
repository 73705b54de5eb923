"""NEFCLASS-style fuzzy classifier.

Gaussian membership functions per input dimension, a fuzzy rule layer
(one MF term per dimension in each antecedent), and per-class outputs
aggregated rule-wise. Inference uses min t-norm / max co-norm by default;
a product t-norm path exists because fine-tuning needs differentiability.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .features import SimplifyParams

SIGMA_MIN = 1e-3  # width floor: keeps mf_eval away from division blow-up


class ModelError(ValueError):
    """Inconsistent model structure (bad indices, empty rule base, ...)."""


@dataclass(frozen=True)
class GaussianMF:
    center: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ModelError(f"sigma must be positive, got {self.sigma}")


def mf_eval(mf: GaussianMF, x: float) -> float:
    """Degree of membership: exp(-(x - c)^2 / (2 sigma^2)), in (0, 1]."""
    d = x - mf.center
    return float(np.exp(-(d * d) / (2.0 * mf.sigma * mf.sigma)))


@dataclass(frozen=True)
class FuzzyPartition:
    """Per input dimension, the ordered Gaussian terms for that input."""

    terms: tuple[tuple[GaussianMF, ...], ...]

    def __post_init__(self) -> None:
        if any(len(dim_terms) < 1 for dim_terms in self.terms):
            raise ModelError("every dimension needs at least one MF term")

    @property
    def dimensions(self) -> int:
        return len(self.terms)

    @property
    def total_terms(self) -> int:
        return sum(len(t) for t in self.terms)

    @staticmethod
    def uniform(dimensions: int, n_terms: int = 5) -> "FuzzyPartition":
        """Evenly spaced centers on [0, 1], sigma = 1 / (2 (T - 1))."""
        if n_terms < 1:
            raise ModelError("n_terms must be >= 1")
        if n_terms == 1:
            row = (GaussianMF(0.5, 0.5),)
        else:
            sigma = 1.0 / (2.0 * (n_terms - 1))
            row = tuple(
                GaussianMF(i / (n_terms - 1), sigma) for i in range(n_terms)
            )
        return FuzzyPartition(tuple(row for _ in range(dimensions)))


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[int, ...]  # one MF term index per input dimension
    consequent: int  # class index

    def __post_init__(self) -> None:
        if self.consequent < 0:
            raise ModelError(f"negative consequent {self.consequent}")


@dataclass(frozen=True)
class ModelConfig:
    """Knobs the source method leaves open; persisted with the model."""

    terms_per_dim: int = 5
    max_rules_per_class: int = 3
    inference: str = "minmax"  # "minmax" or "product"
    reject_threshold: float = 0.1
    smoothmax_tau: float = 20.0

    def __post_init__(self) -> None:
        if self.inference not in ("minmax", "product"):
            raise ModelError(f"unknown inference path {self.inference!r}")


@dataclass
class FuzzyModel:
    """The persisted classifier. Treated as immutable once published."""

    class_labels: list[str]
    partition: FuzzyPartition
    rules: list[FuzzyRule]
    feature_params: SimplifyParams = field(default_factory=SimplifyParams)
    config: ModelConfig = field(default_factory=ModelConfig)

    @property
    def feature_count(self) -> int:
        return self.partition.dimensions

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    def validate(self) -> None:
        if self.feature_count != self.feature_params.feature_count:
            raise ModelError(
                f"partition has {self.feature_count} dimensions but feature "
                f"params produce {self.feature_params.feature_count}"
            )
        if len(set(self.class_labels)) != len(self.class_labels):
            raise ModelError("duplicate class labels")
        seen: set[tuple[int, ...]] = set()
        for i, rule in enumerate(self.rules):
            if len(rule.antecedent) != self.feature_count:
                raise ModelError(f"rules[{i}]: antecedent length != feature count")
            for d, t in enumerate(rule.antecedent):
                if not 0 <= t < len(self.partition.terms[d]):
                    raise ModelError(f"rules[{i}]: term index {t} out of range in dim {d}")
            if not 0 <= rule.consequent < self.class_count:
                raise ModelError(f"rules[{i}]: consequent {rule.consequent} out of range")
            if rule.antecedent in seen:
                raise ModelError(f"rules[{i}]: duplicate antecedent")
            seen.add(rule.antecedent)
        for dim_terms in self.partition.terms:
            for mf in dim_terms:
                if mf.sigma < SIGMA_MIN:
                    raise ModelError(f"sigma {mf.sigma} below floor {SIGMA_MIN}")

    @staticmethod
    def initial(class_labels: Sequence[str],
                feature_params: SimplifyParams | None = None,
                config: ModelConfig | None = None) -> "FuzzyModel":
        feature_params = feature_params or SimplifyParams()
        config = config or ModelConfig()
        partition = FuzzyPartition.uniform(feature_params.feature_count,
                                           config.terms_per_dim)
        return FuzzyModel(list(class_labels), partition, [], feature_params, config)


@dataclass(frozen=True)
class Classification:
    scores: tuple[float, ...]
    best: int  # argmax, ties -> lowest class index
    confidence: float  # max score
    label: str  # resolved label, or "unknown" below the reject threshold


UNKNOWN_LABEL = "unknown"


# ---------------------------------------------------------------------------
# Packed layout shared with the kernel backends


@dataclass(frozen=True)
class PackedModel:
    centers: np.ndarray
    sigmas: np.ndarray
    mf_dim: np.ndarray
    term_offset: np.ndarray
    rule_mf: np.ndarray
    rule_cls: np.ndarray


def pack_partition(partition: FuzzyPartition) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    centers, sigmas, mf_dim = [], [], []
    offsets = [0]
    for d, dim_terms in enumerate(partition.terms):
        for mf in dim_terms:
            centers.append(mf.center)
            sigmas.append(mf.sigma)
            mf_dim.append(d)
        offsets.append(len(centers))
    return (
        np.asarray(centers, dtype=np.float64),
        np.asarray(sigmas, dtype=np.float64),
        np.asarray(mf_dim, dtype=np.int32),
        np.asarray(offsets, dtype=np.int32),
    )


def pack_model(model: FuzzyModel) -> PackedModel:
    centers, sigmas, mf_dim, offsets = pack_partition(model.partition)
    n_rules = len(model.rules)
    rule_mf = np.zeros((n_rules, model.feature_count), dtype=np.int32)
    rule_cls = np.zeros(n_rules, dtype=np.int32)
    for i, rule in enumerate(model.rules):
        for d, t in enumerate(rule.antecedent):
            rule_mf[i, d] = offsets[d] + t
        rule_cls[i] = rule.consequent
    return PackedModel(centers, sigmas, mf_dim, offsets, rule_mf, rule_cls)


def _as_batch(x: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    return np.ascontiguousarray(arr)


# ---------------------------------------------------------------------------
# Inference


def rule_activation(model: FuzzyModel, rule: FuzzyRule, x: Sequence[float]) -> float:
    """T-norm aggregation of the per-dimension membership degrees."""
    if len(x) != model.feature_count:
        raise ModelError(f"feature length {len(x)} != model dimension {model.feature_count}")
    degrees = [
        mf_eval(model.partition.terms[d][t], x[d])
        for d, t in enumerate(rule.antecedent)
    ]
    if model.config.inference == "product":
        out = 1.0
        for g in degrees:
            out *= g
        return out
    return min(degrees)


def score_batch(model: FuzzyModel, X: np.ndarray) -> np.ndarray:
    """Per-class scores [N, C]; an empty rule base scores every class 0."""
    packed = pack_model(model)
    return kernels.classify_batch(
        packed.centers, packed.sigmas, packed.mf_dim, packed.term_offset,
        packed.rule_mf, packed.rule_cls, _as_batch(X), model.class_count,
        model.config.inference == "product",
    )


def classification_from_scores(model: FuzzyModel, scores: np.ndarray) -> Classification:
    best = int(np.argmax(scores))
    confidence = float(scores[best])
    if confidence < model.config.reject_threshold:
        label = UNKNOWN_LABEL
    else:
        label = model.class_labels[best]
    return Classification(tuple(float(s) for s in scores), best, confidence, label)


def classify(model: FuzzyModel, x: Sequence[float]) -> Classification:
    """Classify one feature vector; rejects to "unknown" below threshold."""
    if not model.rules:
        raise ModelError("cannot classify with an empty rule base")
    if len(x) != model.feature_count:
        raise ModelError(f"feature length {len(x)} != model dimension {model.feature_count}")
    scores = score_batch(model, _as_batch(x))[0]
    return classification_from_scores(model, scores)


def predict_batch(model: FuzzyModel, X: np.ndarray) -> np.ndarray:
    """Argmax class index per row (ties -> lowest index); no reject logic."""
    scores = score_batch(model, X)
    return scores.argmax(axis=1)


def accuracy(model: FuzzyModel, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    return float((predict_batch(model, X) == np.asarray(y)).mean())


# ---------------------------------------------------------------------------
# Rule generation from labeled samples


def generate_rules(samples: Iterable[tuple[Sequence[float], int]] | tuple[np.ndarray, np.ndarray],
                   partition: FuzzyPartition,
                   max_rules_per_class: int,
                   n_classes: int | None = None) -> list[FuzzyRule]:
    """Derive the rule base from labeled samples.

    Each sample maps to the antecedent picking the strongest MF per
    dimension; each distinct antecedent becomes one rule whose consequent
    is the majority class among its samples (ties -> lowest class index).
    Per class, the `max_rules_per_class` rules with the highest support
    (sample count for the antecedent) are kept.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        X, y = samples
    else:
        pairs = list(samples)
        if not pairs:
            raise ModelError("samples must be non-empty")
        X = np.asarray([p[0] for p in pairs], dtype=np.float64)
        y = np.asarray([p[1] for p in pairs], dtype=np.int64)
    if X.shape[0] == 0:
        raise ModelError("samples must be non-empty")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if max_rules_per_class <= 0:
        return []

    centers, sigmas, mf_dim, offsets = pack_partition(partition)
    antecedents = kernels.best_terms(centers, sigmas, mf_dim, offsets,
                                     np.ascontiguousarray(X, dtype=np.float64))

    # antecedent tuple -> per-class sample counts
    counts: dict[tuple[int, ...], np.ndarray] = {}
    for row, cls in zip(antecedents, y):
        key = tuple(int(t) for t in row)
        per_class = counts.get(key)
        if per_class is None:
            per_class = np.zeros(n_classes, dtype=np.int64)
            counts[key] = per_class
        per_class[int(cls)] += 1

    by_class: dict[int, list[tuple[int, tuple[int, ...]]]] = {}
    for key, per_class in counts.items():
        consequent = int(per_class.argmax())  # ties -> lowest class index
        support = int(per_class.sum())
        by_class.setdefault(consequent, []).append((support, key))

    rules: list[FuzzyRule] = []
    for cls in sorted(by_class):
        ranked = sorted(by_class[cls], key=lambda sk: (-sk[0], sk[1]))
        for support, key in ranked[:max_rules_per_class]:
            rules.append(FuzzyRule(key, cls))
    return rules


def with_rules_from(model: FuzzyModel, X: np.ndarray, y: np.ndarray) -> FuzzyModel:
    """New model with rules regenerated from the given samples."""
    rules = generate_rules((X, y), model.partition,
                           model.config.max_rules_per_class, model.class_count)
    return replace(model, rules=rules)
