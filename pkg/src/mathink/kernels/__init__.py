"""Classifier hot-path kernels: compiled extension with numpy fallback.

The compiled backend (`_core`, Cython) is used when its build succeeded;
otherwise the numpy implementation in `_pure` takes over. Setting
MATHINK_PURE=1 forces the fallback (useful for benchmarking the two, see
benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("MATHINK_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

membership_degrees = _impl.membership_degrees
classify_batch = _impl.classify_batch
best_terms = _impl.best_terms
loss_and_grad = _impl.loss_and_grad

pure = _pure


def get_backend(name: str):
    """Return a backend module by name ('compiled' or 'pure'); None if absent."""
    if name == "pure":
        return _pure
    if name == "compiled":
        try:
            from . import _core

            return _core
        except ImportError:
            return None
    raise ValueError(f"unknown backend {name!r}")
