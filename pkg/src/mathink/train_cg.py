"""Conjugate-gradient fine-tuning of MF parameters.

Online adaptation after user corrections: minimizes a differentiable
surrogate (product t-norm, log-sum-exp smooth max over each class's rules,
MSE against one-hot targets) over all Gaussian centers and widths.
Polak-Ribiere directions, backtracking line search with quadratic
interpolation, periodic restarts, and box projection (centers in [0, 1],
widths in [sigma_min, 1]). The min/max inference path stays in place for
classification; only the training objective is smoothed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import kernels
from .fuzzy import SIGMA_MIN, FuzzyModel, pack_model
from .train_ga import SIGMA_MAX, decode_partition, encode_partition


@dataclass(frozen=True)
class LineSearchParams:
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4  # Armijo constant
    max_backtracks: int = 30

    def __post_init__(self) -> None:
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must be in (0, 1), got {self.shrink}")


@dataclass(frozen=True)
class CGConfig:
    max_iterations: int = 50
    gradient_tolerance: float = 1e-6
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    restart_period: int = 10
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")


def loss(model: FuzzyModel, X: np.ndarray, y: np.ndarray) -> float:
    """Smooth surrogate loss (mean squared error against one-hot targets)."""
    return _loss_grad(model, X, y)[0]


def gradient(model: FuzzyModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient, interleaved (center, sigma) per MF."""
    return _loss_grad(model, X, y)[1]


def _loss_grad(model: FuzzyModel, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    packed = pack_model(model)
    value, grad_c, grad_s = kernels.loss_and_grad(
        packed.centers, packed.sigmas, packed.mf_dim, packed.term_offset,
        packed.rule_mf, packed.rule_cls,
        np.ascontiguousarray(X, dtype=np.float64),
        np.asarray(y, dtype=np.int64),
        model.class_count, model.config.smoothmax_tau,
    )
    flat = np.empty(2 * grad_c.shape[0], dtype=np.float64)
    flat[0::2] = grad_c
    flat[1::2] = grad_s
    return float(value), flat


def project_gradient(grad: np.ndarray, x: np.ndarray,
                     lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Zero components whose descent step would leave the feasible box."""
    out = grad.copy()
    out[(x <= lower) & (out > 0)] = 0.0
    out[(x >= upper) & (out < 0)] = 0.0
    return out


@dataclass
class CGResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    n_evals: int


def minimize_cg(f: Callable[[np.ndarray], float],
                grad_f: Callable[[np.ndarray], np.ndarray],
                x0: np.ndarray,
                lower: np.ndarray,
                upper: np.ndarray,
                config: CGConfig) -> CGResult:
    """Projected Polak-Ribiere CG; returns the best point observed.

    The line search tries the quadratic-interpolation step first (exact on
    quadratic objectives, which preserves textbook n-step convergence) and
    falls back to geometric backtracking. Accepted steps always satisfy the
    Armijo sufficient-decrease condition, so f never increases.
    """
    ls = config.line_search
    n_evals = 0

    def eval_f(x: np.ndarray) -> float:
        nonlocal n_evals
        n_evals += 1
        return f(x)

    x = np.clip(x0, lower, upper)
    fx = eval_f(x)
    best_x, best_f = x.copy(), fx
    g = grad_f(x)
    pg = project_gradient(g, x, lower, upper)
    iterations = 0
    converged = bool(np.linalg.norm(pg) <= config.gradient_tolerance)
    p = -pg

    while not converged and iterations < config.max_iterations:
        slope = float(pg @ p)
        if slope >= 0.0:  # not a descent direction: restart on steepest descent
            p = -pg
            slope = -float(pg @ pg)
            if slope == 0.0:
                break

        step = _line_search(eval_f, x, p, fx, slope, lower, upper, ls)
        if step is None:
            break
        alpha, x_new, f_new = step
        iterations += 1

        g_new = grad_f(x_new)
        pg_new = project_gradient(g_new, x_new, lower, upper)
        if f_new < best_f:
            best_x, best_f = x_new.copy(), f_new
        if np.linalg.norm(pg_new) <= config.gradient_tolerance:
            x, fx, pg = x_new, f_new, pg_new
            converged = True
            break

        denom = float(pg @ pg)
        beta = 0.0
        if denom > 0.0 and iterations % config.restart_period != 0:
            beta = max(0.0, float(pg_new @ (pg_new - pg)) / denom)
        p = -pg_new + beta * p
        x, fx, g, pg = x_new, f_new, g_new, pg_new

    return CGResult(best_x, best_f, iterations, converged, n_evals)


def _line_search(eval_f, x, p, fx, slope, lower, upper, ls: LineSearchParams):
    """Armijo search along p; returns (alpha, projected point, f value)."""

    def trial(alpha: float):
        xt = np.clip(x + alpha * p, lower, upper)
        return xt, eval_f(xt)

    alpha = ls.initial_step
    xt, ft = trial(alpha)

    # quadratic fit through f(0) = fx, f'(0) = slope, f(alpha) = ft
    denom = ft - fx - slope * alpha
    if denom > 0.0:
        alpha_q = -slope * alpha * alpha / (2.0 * denom)
        if np.isfinite(alpha_q) and alpha_q > 0.0:
            xq, fq = trial(alpha_q)
            if fq <= fx + ls.sufficient_decrease * alpha_q * slope and fq <= ft:
                return alpha_q, xq, fq

    for _ in range(ls.max_backtracks):
        if ft <= fx + ls.sufficient_decrease * alpha * slope:
            return alpha, xt, ft
        alpha *= ls.shrink
        xt, ft = trial(alpha)
    return None


@dataclass
class FineTuneResult:
    model: FuzzyModel
    converged: bool
    iterations: int
    initial_loss: float
    final_loss: float


def run_cg(config: CGConfig, model: FuzzyModel,
           X: np.ndarray, y: np.ndarray) -> FineTuneResult:
    """Fine-tune MF parameters on a batch; rule base stays fixed.

    Returns the model with the lowest observed loss, so the result is never
    worse than the input. Non-convergence within the iteration budget is
    reported through `converged`.
    """
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)

    x0 = encode_partition(model.partition)
    lower = np.empty_like(x0)
    upper = np.empty_like(x0)
    lower[0::2], upper[0::2] = 0.0, 1.0
    lower[1::2], upper[1::2] = SIGMA_MIN, SIGMA_MAX

    def f(genes: np.ndarray) -> float:
        return loss(replace(model, partition=decode_partition(genes, model.partition)), X, y)

    def df(genes: np.ndarray) -> np.ndarray:
        return gradient(replace(model, partition=decode_partition(genes, model.partition)), X, y)

    initial_loss = f(x0)
    result = minimize_cg(f, df, x0, lower, upper, config)
    tuned = replace(model, partition=decode_partition(result.x, model.partition))
    return FineTuneResult(tuned, result.converged, result.iterations,
                          initial_loss, result.fun)
