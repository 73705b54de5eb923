# cython: language_level=3
"""Compiled kernel backend; see _pure.py for the layout contract."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def membership_degrees(cnp.ndarray[cnp.float64_t, ndim=1] centers,
                       cnp.ndarray[cnp.float64_t, ndim=1] sigmas,
                       cnp.ndarray[cnp.int32_t, ndim=1] mf_dim,
                       cnp.ndarray[cnp.float64_t, ndim=2] X):
    cdef Py_ssize_t n = X.shape[0], m = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double diff, s
    for i in range(n):
        for j in range(m):
            diff = X[i, mf_dim[j]] - centers[j]
            s = sigmas[j]
            out[i, j] = exp(-(diff * diff) / (2.0 * s * s))
    return out


def classify_batch(cnp.ndarray[cnp.float64_t, ndim=1] centers,
                   cnp.ndarray[cnp.float64_t, ndim=1] sigmas,
                   cnp.ndarray[cnp.int32_t, ndim=1] mf_dim,
                   cnp.ndarray[cnp.int32_t, ndim=1] term_offset,
                   cnp.ndarray[cnp.int32_t, ndim=2] rule_mf,
                   cnp.ndarray[cnp.int32_t, ndim=1] rule_cls,
                   cnp.ndarray[cnp.float64_t, ndim=2] X,
                   int n_classes,
                   bint product):
    cdef Py_ssize_t n = X.shape[0], r = rule_mf.shape[0], d = rule_mf.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] scores = np.zeros((n, n_classes), dtype=np.float64)
    if r == 0 or n == 0:
        return scores
    cdef cnp.ndarray[cnp.float64_t, ndim=2] degrees = membership_degrees(centers, sigmas, mf_dim, X)
    cdef Py_ssize_t i, j, k
    cdef int c
    cdef double act, g
    for i in range(n):
        for j in range(r):
            if product:
                act = 1.0
                for k in range(d):
                    act *= degrees[i, rule_mf[j, k]]
            else:
                act = 1.0
                for k in range(d):
                    g = degrees[i, rule_mf[j, k]]
                    if g < act:
                        act = g
            c = rule_cls[j]
            if act > scores[i, c]:
                scores[i, c] = act
    return scores


def best_terms(cnp.ndarray[cnp.float64_t, ndim=1] centers,
               cnp.ndarray[cnp.float64_t, ndim=1] sigmas,
               cnp.ndarray[cnp.int32_t, ndim=1] mf_dim,
               cnp.ndarray[cnp.int32_t, ndim=1] term_offset,
               cnp.ndarray[cnp.float64_t, ndim=2] X):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] out = np.empty((n, d), dtype=np.int32)
    cdef Py_ssize_t i, dim, t
    cdef int lo, hi, best
    cdef double best_val, diff, s, v
    for i in range(n):
        for dim in range(d):
            lo = term_offset[dim]
            hi = term_offset[dim + 1]
            best = 0
            best_val = -1.0
            for t in range(lo, hi):
                diff = X[i, dim] - centers[t]
                s = sigmas[t]
                v = exp(-(diff * diff) / (2.0 * s * s))
                if v > best_val:
                    best_val = v
                    best = t - lo
            out[i, dim] = best
    return out


def loss_and_grad(cnp.ndarray[cnp.float64_t, ndim=1] centers,
                  cnp.ndarray[cnp.float64_t, ndim=1] sigmas,
                  cnp.ndarray[cnp.int32_t, ndim=1] mf_dim,
                  cnp.ndarray[cnp.int32_t, ndim=1] term_offset,
                  cnp.ndarray[cnp.int32_t, ndim=2] rule_mf,
                  cnp.ndarray[cnp.int32_t, ndim=1] rule_cls,
                  cnp.ndarray[cnp.float64_t, ndim=2] X,
                  cnp.ndarray[cnp.int64_t, ndim=1] y,
                  int n_classes,
                  double tau):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t m = centers.shape[0], r = rule_mf.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad_c = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad_s = np.zeros(m, dtype=np.float64)

    cdef cnp.ndarray[cnp.float64_t, ndim=2] degrees = membership_degrees(centers, sigmas, mf_dim, X)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] activations = np.empty((n, r), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] scores = np.zeros((n, n_classes), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] weights = np.zeros((n, r), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] peak = np.empty(n_classes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] denom = np.empty(n_classes, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] nrules = np.zeros(n_classes, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prefix = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] suffix = np.empty(d, dtype=np.float64)

    cdef Py_ssize_t i, j, k
    cdef int c, mf
    cdef double act, loss = 0.0, err, dsc, dact, excl, diff, s, g, w
    cdef double inv_nc = 1.0 / (n * n_classes)

    for j in range(r):
        nrules[rule_cls[j]] += 1

    for i in range(n):
        for j in range(r):
            act = 1.0
            for k in range(d):
                act *= degrees[i, rule_mf[j, k]]
            activations[i, j] = act

        # per-class smooth max (log-sum-exp, peak factored out)
        for c in range(n_classes):
            peak[c] = -1.0
            denom[c] = 0.0
        for j in range(r):
            c = rule_cls[j]
            if activations[i, j] > peak[c]:
                peak[c] = activations[i, j]
        for j in range(r):
            c = rule_cls[j]
            w = exp(tau * (activations[i, j] - peak[c]))
            weights[i, j] = w
            denom[c] += w
        for c in range(n_classes):
            if nrules[c] > 0:
                scores[i, c] = peak[c] + log(denom[c]) / tau
        for j in range(r):
            weights[i, j] /= denom[rule_cls[j]]

        for c in range(n_classes):
            err = scores[i, c] - (1.0 if c == y[i] else 0.0)
            loss += err * err

        # gradient: dL/dact -> exclusive products -> MF parameters
        for j in range(r):
            c = rule_cls[j]
            err = scores[i, c] - (1.0 if c == y[i] else 0.0)
            dsc = 2.0 * err * inv_nc
            dact = dsc * weights[i, j]
            if dact == 0.0:
                continue
            act = 1.0
            for k in range(d):
                prefix[k] = act
                act *= degrees[i, rule_mf[j, k]]
            act = 1.0
            for k in range(d - 1, -1, -1):
                suffix[k] = act
                act *= degrees[i, rule_mf[j, k]]
            for k in range(d):
                mf = rule_mf[j, k]
                excl = prefix[k] * suffix[k]
                g = degrees[i, mf]
                diff = X[i, k] - centers[mf]
                s = sigmas[mf]
                grad_c[mf] += dact * excl * g * diff / (s * s)
                grad_s[mf] += dact * excl * g * diff * diff / (s * s * s)

    return loss * inv_nc, grad_c, grad_s
