"""NumPy implementations of the dynamic-programming kernels.

These are the import-time fallback when the compiled extension is not
available; results are identical to the compiled versions to ~1e-15.
"""

from __future__ import annotations

import numpy as np


def pb_tail_probability(probs: np.ndarray, threshold: int) -> float:
    """Pr[sum of independent Bernoulli(probs) >= threshold], exact O(N^2) DP."""
    probs = np.asarray(probs, dtype=float)
    n = probs.size
    if threshold <= 0:
        return 1.0
    if threshold > n:
        return 0.0
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for k, p in enumerate(probs):
        head = pmf[: k + 1].copy()
        pmf[: k + 1] = head * (1.0 - p)
        pmf[1 : k + 2] += head * p
    return float(pmf[threshold:].sum())


def certification_pass_probability(
    probs: np.ndarray, mu: float, thresholds: np.ndarray
) -> float:
    """Exact pass probability of the measure-with-probability-mu protocol.

    State after k copies is the joint distribution over (measured count m,
    win count s). ``thresholds[m]`` is the minimal win count that passes
    when m copies were measured; the m = 0 outcome never counts as a pass.
    """
    probs = np.asarray(probs, dtype=float)
    n = probs.size
    table = np.zeros((n + 1, n + 1))
    table[0, 0] = 1.0
    for k, p in enumerate(probs):
        prev = table[: k + 1, : k + 1].copy()
        table[: k + 1, : k + 1] = prev * (1.0 - mu)
        table[1 : k + 2, 1 : k + 2] += prev * (mu * p)
        table[1 : k + 2, : k + 1] += prev * (mu * (1.0 - p))
    total = 0.0
    for m in range(1, n + 1):
        t = int(thresholds[m])
        if t <= m:
            total += float(table[m, max(t, 0):].sum())
    return total
