"""Pure-Python (numpy) kernel backend.

Mirrors the compiled extension in `_core.pyx`; the package selects one of
the two at import time. All functions take the packed model layout:

  centers, sigmas : float64[M]        flat MF parameters
  mf_dim          : int32[M]          input dimension of each flat MF
  term_offset     : int32[D+1]        per-dimension slice into the flat arrays
  rule_mf         : int32[R, D]       flat MF index per rule antecedent slot
  rule_cls        : int32[R]          consequent class per rule
  X               : float64[N, D]     feature batch
"""

from __future__ import annotations

import numpy as np


def membership_degrees(centers, sigmas, mf_dim, X):
    """Gaussian degrees exp(-(x-c)^2 / (2 sigma^2)) for every MF: [N, M]."""
    diff = X[:, mf_dim] - centers[np.newaxis, :]
    return np.exp(-(diff * diff) / (2.0 * sigmas * sigmas)[np.newaxis, :])


def classify_batch(centers, sigmas, mf_dim, term_offset, rule_mf, rule_cls,
                   X, n_classes, product):
    """Class scores [N, C]: t-norm over antecedents, max over class rules.

    `product` selects the product t-norm; otherwise min. Classes without
    rules score 0 (an empty rule base yields all-zero scores).
    """
    n = X.shape[0]
    scores = np.zeros((n, n_classes), dtype=np.float64)
    if rule_mf.shape[0] == 0 or n == 0:
        return scores
    degrees = membership_degrees(centers, sigmas, mf_dim, X)
    gathered = degrees[:, rule_mf]  # [N, R, D]
    if product:
        activations = gathered.prod(axis=2)
    else:
        activations = gathered.min(axis=2)
    for c in range(n_classes):
        mask = rule_cls == c
        if mask.any():
            scores[:, c] = activations[:, mask].max(axis=1)
    return scores


def best_terms(centers, sigmas, mf_dim, term_offset, X):
    """Per-dimension argmax MF term index [N, D] (ties -> lowest index)."""
    n, d = X.shape
    degrees = membership_degrees(centers, sigmas, mf_dim, X)
    out = np.empty((n, d), dtype=np.int32)
    for dim in range(d):
        lo, hi = term_offset[dim], term_offset[dim + 1]
        out[:, dim] = degrees[:, lo:hi].argmax(axis=1)
    return out


def loss_and_grad(centers, sigmas, mf_dim, term_offset, rule_mf, rule_cls,
                  X, y, n_classes, tau):
    """MSE loss and its analytic gradient over all (center, sigma).

    Scores use the differentiable path: product t-norm and a log-sum-exp
    smooth max (temperature tau) over each class's rules; targets are
    one-hot. Loss is averaged over samples and classes. Returns
    (loss, dloss_dcenter[M], dloss_dsigma[M]).
    """
    n, d = X.shape
    m = centers.shape[0]
    r = rule_mf.shape[0]
    grad_c = np.zeros(m, dtype=np.float64)
    grad_s = np.zeros(m, dtype=np.float64)

    degrees = membership_degrees(centers, sigmas, mf_dim, X)
    gathered = degrees[:, rule_mf]  # [N, R, D]
    activations = gathered.prod(axis=2)  # [N, R]

    scores = np.zeros((n, n_classes), dtype=np.float64)
    weights = np.zeros((n, r), dtype=np.float64)  # d score / d activation
    class_rules = [np.flatnonzero(rule_cls == c) for c in range(n_classes)]
    for c, idx in enumerate(class_rules):
        if idx.size == 0:
            continue
        a = activations[:, idx]
        peak = a.max(axis=1, keepdims=True)
        expd = np.exp(tau * (a - peak))
        denom = expd.sum(axis=1, keepdims=True)
        scores[:, c] = (peak + np.log(denom) / tau)[:, 0]
        weights[:, idx] = expd / denom

    target = np.zeros((n, n_classes), dtype=np.float64)
    target[np.arange(n), y] = 1.0
    err = scores - target
    loss = float((err * err).mean())

    # d loss / d activation, then product-rule gradient via exclusive products
    dscore = 2.0 * err / (n * n_classes)
    dact = dscore[:, rule_cls] * weights  # [N, R]

    ones = np.ones((n, r, 1), dtype=np.float64)
    prefix = np.concatenate([ones, np.cumprod(gathered, axis=2)[:, :, :-1]], axis=2)
    suffix = np.concatenate(
        [np.cumprod(gathered[:, :, ::-1], axis=2)[:, :, -2::-1], ones], axis=2
    )
    ddeg = dact[:, :, np.newaxis] * prefix * suffix  # [N, R, D]

    flat_mf = np.broadcast_to(rule_mf, (n, r, d))
    xv = np.broadcast_to(X[:, np.newaxis, :], (n, r, d))
    cv = centers[flat_mf]
    sv = sigmas[flat_mf]
    gv = gathered
    diff = xv - cv
    dc_term = ddeg * gv * diff / (sv * sv)
    ds_term = ddeg * gv * diff * diff / (sv * sv * sv)
    np.add.at(grad_c, flat_mf.ravel(), dc_term.ravel())
    np.add.at(grad_s, flat_mf.ravel(), ds_term.ravel())
    return loss, grad_c, grad_s
