"""Genetic-algorithm training of the Gaussian MF parameters.

Cold-start fitting: a chromosome is the flat (center, sigma) vector for
every MF; fitness is classification accuracy on the training set with the
rule base regenerated from the decoded partition. Tournament selection,
per-gene arithmetic blend crossover, additive Gaussian mutation, elitism.
Fully deterministic under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fuzzy import (
    SIGMA_MIN,
    FuzzyModel,
    FuzzyPartition,
    GaussianMF,
    accuracy,
    generate_rules,
)

SIGMA_MAX = 1.0


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 40
    generations: int = 60
    tournament_k: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1  # per gene
    mutation_sigma: float = 0.05
    elitism_count: int = 2
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.elitism_count < 1:
            raise ValueError("elitism_count must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def encode_partition(partition: FuzzyPartition) -> np.ndarray:
    """Flat gene vector: (center, sigma) per MF in dimension-major order."""
    genes: list[float] = []
    for dim_terms in partition.terms:
        for mf in dim_terms:
            genes.append(mf.center)
            genes.append(mf.sigma)
    return np.asarray(genes, dtype=np.float64)


def decode_partition(genes: np.ndarray, template: FuzzyPartition) -> FuzzyPartition:
    """Rebuild a partition from genes, clamping into the legal box."""
    clamped = clamp_genes(genes)
    terms: list[tuple[GaussianMF, ...]] = []
    i = 0
    for dim_terms in template.terms:
        row = []
        for _ in dim_terms:
            row.append(GaussianMF(float(clamped[i]), float(clamped[i + 1])))
            i += 2
        terms.append(tuple(row))
    return FuzzyPartition(tuple(terms))


def clamp_genes(genes: np.ndarray) -> np.ndarray:
    out = genes.copy()
    out[0::2] = np.clip(out[0::2], 0.0, 1.0)  # centers
    out[1::2] = np.clip(out[1::2], SIGMA_MIN, SIGMA_MAX)  # widths
    return out


def fitness(model: FuzzyModel, genes: np.ndarray,
            X: np.ndarray, y: np.ndarray) -> float:
    """Accuracy on the train set with rules regenerated for these genes."""
    expected = 2 * model.partition.total_terms
    if genes.shape[0] != expected:
        raise ValueError(f"chromosome length {genes.shape[0]} != {expected}")
    candidate = decoded_model(model, genes, X, y)
    return accuracy(candidate, X, y)


def decoded_model(model: FuzzyModel, genes: np.ndarray,
                  X: np.ndarray, y: np.ndarray) -> FuzzyModel:
    partition = decode_partition(genes, model.partition)
    rules = generate_rules((X, y), partition,
                           model.config.max_rules_per_class, model.class_count)
    return replace(model, partition=partition, rules=rules)


@dataclass
class GAResult:
    model: FuzzyModel
    history: list[float]  # best-so-far fitness, one entry per generation + start

    @property
    def best_fitness(self) -> float:
        return self.history[-1]


def run_ga(config: GAConfig, X: np.ndarray, y: np.ndarray,
           initial_model: FuzzyModel) -> GAResult:
    """Evolve MF parameters; returns the best-ever decoded model.

    history[0] is the initial model's fitness; each generation appends the
    best fitness observed so far (non-decreasing when elitism >= 1).
    """
    if X.shape[0] == 0:
        raise ValueError("train set must be non-empty")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(config.rng_seed)

    base = clamp_genes(encode_partition(initial_model.partition))
    n_genes = base.shape[0]
    best_genes = base
    best_fit = fitness(initial_model, base, X, y)
    history = [best_fit]

    if config.generations == 0:
        return GAResult(decoded_model(initial_model, best_genes, X, y), history)

    # individual 0 keeps the initial parameters; the rest explore uniformly
    population = np.empty((config.population_size, n_genes), dtype=np.float64)
    population[0] = base
    for i in range(1, config.population_size):
        genes = np.empty(n_genes, dtype=np.float64)
        genes[0::2] = rng.uniform(0.0, 1.0, n_genes // 2)
        genes[1::2] = rng.uniform(0.02, 0.5, n_genes // 2)
        population[i] = genes

    fits = np.empty(config.population_size, dtype=np.float64)
    for gen in range(config.generations):
        if gen > 0:
            population = _next_generation(population, fits, config, rng)
        for i in range(config.population_size):
            fits[i] = fitness(initial_model, population[i], X, y)
        gen_best = int(fits.argmax())  # ties -> lowest index
        if fits[gen_best] > best_fit:
            best_fit = float(fits[gen_best])
            best_genes = population[gen_best].copy()
        history.append(best_fit)

    return GAResult(decoded_model(initial_model, best_genes, X, y), history)


def _tournament(fits: np.ndarray, k: int, rng: np.random.Generator) -> int:
    contenders = rng.integers(0, fits.shape[0], size=k)
    best = contenders[0]
    for idx in contenders[1:]:
        if fits[idx] > fits[best] or (fits[idx] == fits[best] and idx < best):
            best = idx
    return int(best)


def _next_generation(population: np.ndarray, fits: np.ndarray,
                     config: GAConfig, rng: np.random.Generator) -> np.ndarray:
    size, n_genes = population.shape
    out = np.empty_like(population)
    elite_order = np.lexsort((np.arange(size), -fits))
    n_elite = min(config.elitism_count, size)
    out[:n_elite] = population[elite_order[:n_elite]]  # copied unchanged

    for i in range(n_elite, size):
        p1 = population[_tournament(fits, config.tournament_k, rng)]
        p2 = population[_tournament(fits, config.tournament_k, rng)]
        if rng.random() < config.crossover_rate:
            alpha = rng.random(n_genes)
            child = alpha * p1 + (1.0 - alpha) * p2
        else:
            child = p1.copy()
        mask = rng.random(n_genes) < config.mutation_rate
        if mask.any():
            child[mask] += rng.normal(0.0, config.mutation_sigma, int(mask.sum()))
        out[i] = clamp_genes(child)
    return out
