# cython: language_level=3
"""Compiled dynamic-programming kernels (see pure.py for the reference)."""

import numpy as np


def pb_tail_probability(double[::1] probs, Py_ssize_t threshold):
    """Pr[sum of independent Bernoulli(probs) >= threshold], exact O(N^2) DP."""
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t k, j
    cdef double p, q
    if threshold <= 0:
        return 1.0
    if threshold > n:
        return 0.0
    pmf_arr = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] pmf = pmf_arr
    pmf[0] = 1.0
    for k in range(n):
        p = probs[k]
        q = 1.0 - p
        for j in range(k + 1, 0, -1):
            pmf[j] = pmf[j] * q + pmf[j - 1] * p
        pmf[0] = pmf[0] * q
    cdef double total = 0.0
    for j in range(threshold, n + 1):
        total += pmf[j]
    return total


def certification_pass_probability(double[::1] probs, double mu, long[::1] thresholds):
    """Exact pass probability of the measure-with-probability-mu protocol."""
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t k, m, s, t
    cdef double p, keep, win, lose
    table_arr = np.zeros((n + 1, n + 1), dtype=np.float64)
    cdef double[:, ::1] table = table_arr
    table[0, 0] = 1.0
    for k in range(n):
        p = probs[k]
        keep = 1.0 - mu
        win = mu * p
        lose = mu * (1.0 - p)
        # sweep high-to-low so updates read only not-yet-written cells
        for m in range(k + 1, 0, -1):
            for s in range(m, -1, -1):
                table[m, s] = table[m, s] * keep + table[m - 1, s] * lose
                if s > 0:
                    table[m, s] += table[m - 1, s - 1] * win
        for s in range(k + 1):
            table[0, s] = table[0, s] * keep
    cdef double total = 0.0
    for m in range(1, n + 1):
        t = thresholds[m]
        if t < 0:
            t = 0
        if t <= m:
            for s in range(t, m + 1):
                total += table[m, s]
    return total
