"""Kernel dispatch: compiled extension when built, NumPy fallback otherwise.

``BACKEND`` records which implementation was selected at import time. Both
expose the same two functions and agree to ~1e-15; the compiled one is just
faster (see benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import numpy as np

from . import pure

try:  # pragma: no cover - depends on build environment
    from . import _fast

    _impl = _fast
    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    _impl = pure
    BACKEND = "pure"


def pb_tail_probability(probs, threshold: int) -> float:
    """Pr[sum of independent Bernoulli(probs) >= threshold]."""
    p = np.ascontiguousarray(probs, dtype=np.float64)
    return float(_impl.pb_tail_probability(p, int(threshold)))


def certification_pass_probability(probs, mu: float, thresholds) -> float:
    """Exact pass probability over the measured/unmeasured split; m=0 never passes."""
    p = np.ascontiguousarray(probs, dtype=np.float64)
    t = np.ascontiguousarray(thresholds, dtype=np.int64)
    if t.size != p.size + 1:
        raise ValueError("thresholds must have length len(probs) + 1")
    return float(_impl.certification_pass_probability(p, float(mu), t))
