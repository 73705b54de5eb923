"""Benchmark the compiled classifier kernels against the numpy fallback.

Times the three hot paths (batch forward pass, rule-generation argmax,
loss + gradient) on a model shaped like the production one (F=32,
40 classes, 5 terms per input, 3 rules per class), plus a GA-sized
fitness workload. Run:

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from mathink import kernels
from mathink.features import SimplifyParams
from mathink.fuzzy import FuzzyModel, ModelConfig, generate_rules, pack_model
from mathink.fuzzy import FuzzyPartition


def build_workload(n_samples=3000, dims=32, n_classes=40, terms=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n_samples, dims))
    y = rng.integers(0, n_classes, size=n_samples)
    model = FuzzyModel(
        [f"c{i}" for i in range(n_classes)],
        FuzzyPartition.uniform(dims, terms),
        [],
        SimplifyParams(target_vertices=dims // 2),
        ModelConfig(terms_per_dim=terms),
    )
    rules = generate_rules((X, y), model.partition, 3, n_classes)
    model.rules.extend(rules)
    return model, X, y


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(backend, model, X, y) -> dict[str, float]:
    packed = pack_model(model)
    n_classes = model.class_count
    y64 = np.asarray(y, dtype=np.int64)
    Xb = np.ascontiguousarray(X)
    out = {}
    out["classify_batch"] = timeit(lambda: backend.classify_batch(
        packed.centers, packed.sigmas, packed.mf_dim, packed.term_offset,
        packed.rule_mf, packed.rule_cls, Xb, n_classes, False))
    out["best_terms"] = timeit(lambda: backend.best_terms(
        packed.centers, packed.sigmas, packed.mf_dim, packed.term_offset, Xb))
    small = Xb[:64]
    ysmall = y64[:64]
    out["loss_and_grad(64)"] = timeit(lambda: backend.loss_and_grad(
        packed.centers, packed.sigmas, packed.mf_dim, packed.term_offset,
        packed.rule_mf, packed.rule_cls, small, ysmall, n_classes, 20.0))
    return out


def main() -> None:
    model, X, y = build_workload()
    backends = {}
    compiled = kernels.get_backend("compiled")
    if compiled is not None:
        backends["compiled"] = compiled
    backends["pure"] = kernels.get_backend("pure")

    print(f"workload: {X.shape[0]} samples, F={X.shape[1]}, "
          f"C={model.class_count}, rules={len(model.rules)}")
    print(f"active backend at import: {kernels.BACKEND}\n")
    results = {name: bench_backend(be, model, X, y) for name, be in backends.items()}

    ops = list(next(iter(results.values())))
    width = max(len(op) for op in ops)
    header = f"{'op':<{width}}  " + "  ".join(f"{n:>12}" for n in results)
    print(header)
    print("-" * len(header))
    for op in ops:
        row = f"{op:<{width}}  " + "  ".join(
            f"{results[n][op] * 1000:>9.2f} ms" for n in results)
        print(row)
    if "compiled" in results:
        print()
        for op in ops:
            speedup = results["pure"][op] / results["compiled"][op]
            print(f"{op:<{width}}  compiled is {speedup:4.1f}x faster")


if __name__ == "__main__":
    main()
