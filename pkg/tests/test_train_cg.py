import math

import numpy as np
import pytest

from mathink.features import SimplifyParams
from mathink.fuzzy import (
    FuzzyModel,
    FuzzyPartition,
    FuzzyRule,
    GaussianMF,
    ModelConfig,
    classify,
    generate_rules,
)
from mathink.train_cg import (
    CGConfig,
    LineSearchParams,
    gradient,
    loss,
    minimize_cg,
    project_gradient,
    run_cg,
)
from .conftest import random_model


def product_model(dims=2, n_classes=2, rules=None, tau=20.0):
    partition = FuzzyPartition.uniform(dims, 3)
    rules = rules or [FuzzyRule((0,) * dims, 0), FuzzyRule((2,) * dims, 1)]
    labels = [f"c{i}" for i in range(n_classes)]
    return FuzzyModel(labels, partition, rules, SimplifyParams(),
                      ModelConfig(smoothmax_tau=tau))


def oracle_loss(model, X, y):
    """Independent per-sample loop: product t-norm, stable LSE smooth max."""
    tau = model.config.smoothmax_tau
    total = 0.0
    n, c_count = len(X), model.class_count
    for xi, yi in zip(X, y):
        acts = {}
        for rule in model.rules:
            a = 1.0
            for d, t in enumerate(rule.antecedent):
                mf = model.partition.terms[d][t]
                a *= math.exp(-((xi[d] - mf.center) ** 2) / (2 * mf.sigma**2))
            acts.setdefault(rule.consequent, []).append(a)
        for c in range(c_count):
            if c in acts:
                peak = max(acts[c])
                s = peak + math.log(sum(math.exp(tau * (a - peak)) for a in acts[c])) / tau
            else:
                s = 0.0
            target = 1.0 if c == yi else 0.0
            total += (s - target) ** 2
    return total / (n * c_count)


class TestLoss:
    def test_exact_one_hot_gives_zero(self):
        # single rule per class; widths at the floor make the off-class
        # activation underflow to exactly 0, the on-class to exactly 1
        partition = FuzzyPartition(
            ((GaussianMF(0.0, 1e-3), GaussianMF(1.0, 1e-3)),)
        )
        model = FuzzyModel(["a", "b"], partition,
                           [FuzzyRule((0,), 0), FuzzyRule((1,), 1)],
                           SimplifyParams(), ModelConfig())
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        assert loss(model, X, y) == 0.0

    def test_single_rule_matches_hand_expansion(self):
        partition = FuzzyPartition(((GaussianMF(0.3, 0.2),), (GaussianMF(0.7, 0.1),)))
        model = FuzzyModel(["a", "b"], partition, [FuzzyRule((0, 0), 0)],
                           SimplifyParams(), ModelConfig())
        x = [0.45, 0.65]
        a = math.exp(-((0.45 - 0.3) ** 2) / (2 * 0.2**2)) * math.exp(
            -((0.65 - 0.7) ** 2) / (2 * 0.1**2)
        )
        # single rule: smooth max reduces to the activation itself
        want = ((a - 1.0) ** 2 + 0.0**2) / 2.0
        got = loss(model, np.array([x]), np.array([0]))
        assert abs(got - want) <= 1e-12

    def test_matches_loop_oracle(self, rng):
        for _ in range(10):
            model = random_model(rng, dims=3, n_classes=3, n_rules=6, inference="product")
            X = np.array([[rng.uniform(0, 1) for _ in range(3)] for _ in range(7)])
            y = np.array([rng.randrange(3) for _ in range(7)])
            assert abs(loss(model, X, y) - oracle_loss(model, X, y)) <= 1e-12

    def test_empty_batch_rejected(self):
        model = product_model()
        with pytest.raises(ValueError):
            loss(model, np.zeros((0, 2)), np.zeros(0, dtype=int))


class TestGradient:
    def test_zero_at_exact_minimum(self):
        partition = FuzzyPartition(
            ((GaussianMF(0.0, 1e-3), GaussianMF(1.0, 1e-3)),)
        )
        model = FuzzyModel(["a", "b"], partition,
                           [FuzzyRule((0,), 0), FuzzyRule((1,), 1)],
                           SimplifyParams(), ModelConfig())
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        g = gradient(model, X, y)
        assert np.max(np.abs(g)) <= 1e-10

    def test_matches_finite_differences(self, rng):
        from mathink.train_ga import decode_partition, encode_partition

        h = 1e-5
        for _ in range(10):
            model = random_model(rng, dims=2, n_classes=2, n_rules=4)
            X = np.array([[rng.uniform(0.1, 0.9) for _ in range(2)] for _ in range(5)])
            y = np.array([rng.randrange(2) for _ in range(5)])
            genes = encode_partition(model.partition)
            analytic = gradient(model, X, y)
            for i in range(genes.shape[0]):
                up = genes.copy()
                up[i] += h
                dn = genes.copy()
                dn[i] -= h
                f_up = loss(model.__class__(model.class_labels,
                                            decode_partition(up, model.partition),
                                            model.rules, model.feature_params,
                                            model.config), X, y)
                f_dn = loss(model.__class__(model.class_labels,
                                            decode_partition(dn, model.partition),
                                            model.rules, model.feature_params,
                                            model.config), X, y)
                fd = (f_up - f_dn) / (2 * h)
                # floor above the finite-difference cancellation noise
                scale = max(abs(fd), abs(analytic[i]), 1e-6)
                assert abs(analytic[i] - fd) / scale <= 1e-4

    def test_projection_zeroes_bound_pushing_components(self):
        x = np.array([0.0, 0.5, 1.0])
        lower = np.zeros(3)
        upper = np.ones(3)
        g = np.array([0.7, 0.2, -0.3])
        pg = project_gradient(g, x, lower, upper)
        assert pg[0] == 0.0  # at lower bound, positive gradient points out
        assert pg[1] == 0.2
        assert pg[2] == 0.0  # at upper bound, negative gradient points out

    def test_projection_keeps_inward_components(self):
        x = np.array([0.0, 1.0])
        pg = project_gradient(np.array([-0.4, 0.6]), x, np.zeros(2), np.ones(2))
        assert pg[0] == -0.4 and pg[1] == 0.6


class TestMinimizeCG:
    def test_quadratic_5dim_converges_in_5_iterations(self):
        # closed-form oracle: minimum of 0.5 x'Ax - b'x is A^{-1} b
        A = np.array(
            [
                [4.0, 1.0, 0.0, 0.0, 0.0],
                [1.0, 3.0, 1.0, 0.0, 0.0],
                [0.0, 1.0, 5.0, 1.0, 0.0],
                [0.0, 0.0, 1.0, 4.0, 1.0],
                [0.0, 0.0, 0.0, 1.0, 3.0],
            ]
        )
        b = np.array([1.0, -2.0, 3.0, 0.5, -1.0])
        x_star = np.linalg.solve(A, b)

        def f(x):
            return 0.5 * x @ A @ x - b @ x

        def df(x):
            return A @ x - b

        bounds = np.full(5, -np.inf), np.full(5, np.inf)
        config = CGConfig(max_iterations=10, gradient_tolerance=1e-8, restart_period=100)
        result = minimize_cg(f, df, np.zeros(5), bounds[0], bounds[1], config)
        assert result.converged
        assert result.iterations <= 5
        assert np.linalg.norm(df(result.x)) < 1e-8
        assert np.max(np.abs(result.x - x_star)) <= 1e-8

    def test_already_optimal_stops_immediately(self):
        A = np.eye(3)

        def f(x):
            return 0.5 * x @ A @ x

        def df(x):
            return A @ x

        config = CGConfig(gradient_tolerance=1e-6)
        result = minimize_cg(f, df, np.zeros(3), np.full(3, -np.inf), np.full(3, np.inf), config)
        assert result.converged and result.iterations == 0


class TestRunCG:
    def test_loss_never_increases(self, rng):
        model = random_model(rng, dims=2, n_classes=2, n_rules=4)
        X = np.array([[rng.uniform(0, 1) for _ in range(2)] for _ in range(10)])
        y = np.array([rng.randrange(2) for _ in range(10)])
        result = run_cg(CGConfig(max_iterations=20), model, X, y)
        assert result.final_loss <= result.initial_loss + 1e-15

    def test_already_optimal_returns_equal_model(self):
        partition = FuzzyPartition(
            ((GaussianMF(0.0, 1e-3), GaussianMF(1.0, 1e-3)),)
        )
        model = FuzzyModel(["a", "b"], partition,
                           [FuzzyRule((0,), 0), FuzzyRule((1,), 1)],
                           SimplifyParams(), ModelConfig())
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        result = run_cg(CGConfig(), model, X, y)
        assert result.iterations <= 1
        assert result.model.partition == model.partition

    def test_correction_scenario_flips_label(self, np_rng):
        # 20 background samples from two blobs, then one corrected sample:
        # after fine-tuning, the corrected point classifies to its new label
        X_bg = np.vstack(
            [
                np_rng.normal([0.25, 0.25], 0.05, size=(10, 2)),
                np_rng.normal([0.75, 0.75], 0.05, size=(10, 2)),
            ]
        ).clip(0, 1)
        y_bg = np.repeat([0, 1], 10)
        partition = FuzzyPartition.uniform(2, 3)
        rules = generate_rules((X_bg, y_bg), partition, 3, n_classes=2)
        model = FuzzyModel(["a", "b"], partition, rules, SimplifyParams(),
                           ModelConfig(terms_per_dim=3, max_rules_per_class=3))

        corrected_x = np.array([0.55, 0.55])
        corrected_y = 1
        # include a rule for the corrected sample, as the engine does
        from mathink.fuzzy import pack_partition
        from mathink import kernels

        centers, sigmas, mf_dim, offsets = pack_partition(model.partition)
        ante = tuple(
            int(t) for t in kernels.best_terms(centers, sigmas, mf_dim, offsets,
                                               corrected_x[np.newaxis, :])[0]
        )
        rules = [r for r in model.rules if r.antecedent != ante]
        rules.append(FuzzyRule(ante, corrected_y))
        model = FuzzyModel(model.class_labels, model.partition, rules,
                           model.feature_params, model.config)

        X = np.vstack([X_bg, corrected_x])
        y = np.concatenate([y_bg, [corrected_y]])
        result = run_cg(CGConfig(max_iterations=60), model, X, y)
        got = classify(result.model, corrected_x)
        assert got.best == corrected_y


def test_config_validation():
    with pytest.raises(ValueError):
        CGConfig(max_iterations=0)
    with pytest.raises(ValueError):
        CGConfig(gradient_tolerance=0.0)
    with pytest.raises(ValueError):
        LineSearchParams(shrink=1.0)


def test_production_scale_wall_time():
    # fine-tuning exists for speed: a 40-class, F=32 model with a
    # 32-sample batch must tune well under the real-time budget
    import time

    from mathink import kernels
    from mathink.fuzzy import generate_rules

    rng = np.random.default_rng(0)
    dims, n_classes = 32, 40
    partition = FuzzyPartition.uniform(dims, 5)
    X_rules = rng.uniform(0, 1, size=(200, dims))
    y_rules = rng.integers(0, n_classes, size=200)
    rules = generate_rules((X_rules, y_rules), partition, 3, n_classes)
    model = FuzzyModel([f"c{i}" for i in range(n_classes)], partition, rules,
                       SimplifyParams(), ModelConfig())
    X = rng.uniform(0, 1, size=(32, dims))
    y = rng.integers(0, n_classes, size=32)
    t0 = time.perf_counter()
    result = run_cg(CGConfig(max_iterations=40), model, X, y)
    elapsed = time.perf_counter() - t0
    budget = 0.5 if kernels.BACKEND == "compiled" else 3.0
    assert elapsed <= budget, f"{elapsed:.3f}s over budget ({kernels.BACKEND})"
    assert result.final_loss <= result.initial_loss + 1e-15
