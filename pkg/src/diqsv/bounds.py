"""Closed-form tail bounds, sample-size planners, and their approximations.

Every bound is driven by the binary Kullback-Leibler divergence

    D(a||b) = a ln(a/b) + (1-a) ln((1-a)/(1-b))

with natural logarithms and the 0*ln(0) = 0 convention. The two planner
families are:

- verification (every copy measured): pass probability of a sample whose
  mean success probability is at most p2 is bounded by exp(-D(p1||p2) N),
  where p1 is the acceptance threshold;
- certification (each copy measured with probability mu): the same event is
  bounded by [1 - mu + mu exp(-D(p1||p2))]^N.

Sample sizes are the smallest integers driving those bounds below the
failure budget delta; all planners round up. eps1 >= eps2 is rejected
everywhere since the two hypotheses are then indistinguishable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Sequence

import numpy as np

from .games import RobustnessModel


def kl_divergence(a: float, b: float) -> float:
    """Binary KL divergence D(a||b); returns inf when b sits on the boundary away from a."""
    if not 0.0 < a <= 1.0:
        raise ValueError(f"first argument must lie in (0, 1], got {a}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"second argument must lie in [0, 1], got {b}")
    if a == b:
        return 0.0
    if b == 0.0 or (b == 1.0 and a < 1.0):
        return math.inf
    first = a * math.log(a / b)
    second = 0.0 if a == 1.0 else (1.0 - a) * math.log((1.0 - a) / (1.0 - b))
    return first + second


def pass_threshold(p1: float, n: int) -> int:
    """Smallest win count q with q/n >= p1, exact in rational arithmetic.

    Ties count as passes: q/n == p1 is a success. The threshold is read off
    the shortest decimal representation of p1 (what a caller typed, e.g.
    0.8 means 4/5 rather than the nearest binary double), and the ceil is
    taken over exact rationals, so no code path can drift by a rounding
    error.
    """
    if n < 0:
        raise ValueError("round count must be non-negative")
    f = Fraction(Decimal(str(float(p1)))) * n
    return max(int(math.ceil(f)), 0)


def _check_eps(eps1: float, eps2: float, p_qm: float) -> tuple[float, float]:
    """Validate tolerance pair, return (p1, p2)."""
    if not 0.0 < p_qm <= 1.0:
        raise ValueError(f"quantum bound must lie in (0, 1], got {p_qm}")
    if eps1 < 0.0 or eps2 <= 0.0:
        raise ValueError("tolerances must be positive (eps1 may be 0 for the all-pass mode)")
    if eps1 >= eps2:
        raise ValueError(f"indistinguishable hypotheses: eps1={eps1} >= eps2={eps2}")
    p2 = p_qm - eps2
    if p2 <= 0.0:
        raise ValueError(f"eps2={eps2} leaves no success probability (p2={p2} <= 0)")
    return p_qm - eps1, p2


def verification_tail_bound(p1: float, p2: float, n: int) -> float:
    """exp(-D(p1||p2) N): pass-probability ceiling when the sample mean is at most p2."""
    if n < 0:
        raise ValueError("round count must be non-negative")
    if p1 <= p2:
        raise ValueError(f"bound is vacuous for p1={p1} <= p2={p2}")
    if n == 0:
        return 1.0
    return min(math.exp(-kl_divergence(p1, p2) * n), 1.0)


def verification_sample_size(p_qm: float, eps1: float, eps2: float, delta: float) -> int:
    """Copies needed to push the verification tail bound below delta."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"failure budget delta must lie in (0, 1], got {delta}")
    p1, p2 = _check_eps(eps1, eps2, p_qm)
    d = kl_divergence(p1, p2)
    return int(math.ceil(math.log(1.0 / delta) / d))


def allpass_sample_size(c: float, eta: float, delta: float) -> int:
    """Copies for the all-rounds-pass test: ceil(ln(delta) / ln(1 - c*eta))."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"failure budget delta must lie in (0, 1], got {delta}")
    ce = c * eta
    if not 0.0 < ce < 1.0:
        raise ValueError(f"c*eta={ce} must lie in (0, 1)")
    return int(math.ceil(math.log(delta) / math.log(1.0 - ce)))


def dd_sample_size(nu: float, eta: float, delta: float) -> int:
    """Device-dependent planner: ceil(ln(delta) / ln(1 - eta*nu)) for spectral gap nu.

    Assumes a perfect strategy (the target state passes every setting with
    certainty), i.e. the all-rounds-pass test. Strategies whose operator
    does not have the target as a unit-eigenvalue eigenstate need a
    frequency-threshold test with quadratically worse scaling in eta; no
    planner for that mode is provided here.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"failure budget delta must lie in (0, 1], got {delta}")
    en = eta * nu
    if not 0.0 < en < 1.0:
        raise ValueError(f"eta*nu={en} must lie in (0, 1)")
    return int(math.ceil(math.log(delta) / math.log(1.0 - en)))


def certification_tail_bound(mu: float, p1: float, p2: float, n: int) -> float:
    """[1 - mu + mu exp(-D(p1||p2))]^N; reduces to the verification bound at mu=1."""
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"measurement probability mu must lie in (0, 1], got {mu}")
    if n < 0:
        raise ValueError("round count must be non-negative")
    if p1 <= p2:
        raise ValueError(f"bound is vacuous for p1={p1} <= p2={p2}")
    base = 1.0 - mu + mu * math.exp(-kl_divergence(p1, p2))
    return min(base ** n, 1.0)


def certification_sample_size(mu: float, p_qm: float, eps1: float, eps2: float, delta: float) -> int:
    """Copies needed to push the certification tail bound below delta."""
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"measurement probability mu must lie in (0, 1], got {mu}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"failure budget delta must lie in (0, 1], got {delta}")
    p1, p2 = _check_eps(eps1, eps2, p_qm)
    base = 1.0 - mu + mu * math.exp(-kl_divergence(p1, p2))
    return int(math.ceil(math.log(delta) / math.log(base)))


@dataclass(frozen=True)
class CertificateFloor:
    """Success-probability floor for the unmeasured copies."""

    exact: float          # (N p2 - N1 p_qm) / (N - N1), realized split
    mu_approx: float | None  # p_qm - eps2/(1 - mu), planned split


def certificate_success_floor(p2: float, p_qm: float, n: int, n1: int, mu: float | None = None) -> CertificateFloor:
    """Floor on the mean success probability of the copies left unmeasured.

    Both the exact form with the realized split (n, n1) and, when ``mu`` is
    given, the planned-split approximation are reported.
    """
    if n1 >= n:
        raise ValueError(f"no certificate remains: n1={n1} >= n={n}")
    if n1 < 0:
        raise ValueError("measured count must be non-negative")
    exact = (n * p2 - n1 * p_qm) / (n - n1)
    approx = None
    if mu is not None:
        if not 0.0 < mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1) for the approximation, got {mu}")
        approx = p_qm - (p_qm - p2) / (1.0 - mu)
    return CertificateFloor(exact=exact, mu_approx=approx)


@dataclass(frozen=True)
class MappedValue:
    value: float
    clamped: bool


def extractability_success_map(model: RobustnessModel, direction: str, value: float) -> MappedValue:
    """Convert between extractability deficit and success probability.

    direction "eta_to_success": eta -> p_qm - c*eta (best win probability of
    a state with extractability 1 - eta). direction "success_to_floor":
    success probability p -> 1 - (p_qm - p)/c (extractability floor).
    Results are clamped to [0, 1] with the clamp flagged.
    """
    c = model.require_c()
    if direction == "eta_to_success":
        raw = model.p_qm - c * value
    elif direction == "success_to_floor":
        raw = 1.0 - (model.p_qm - value) / c
    else:
        raise ValueError(f"unknown direction {direction!r}")
    clamped = min(max(raw, 0.0), 1.0)
    return MappedValue(value=clamped, clamped=(clamped != raw))


def mgf_bound_raw(t: float, mu: float, p1: float, p2: float) -> float:
    """Moment bound f(t) = 1 - mu + mu e^{-p1 t} + mu p2 (e^{(1-p1)t} - e^{-p1 t})."""
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    return 1.0 - mu + mu * math.exp(-p1 * t) + mu * p2 * (math.exp((1.0 - p1) * t) - math.exp(-p1 * t))


def optimal_t(p1: float, p2: float) -> float:
    """Minimizer of the moment bound: ln[p1 (1-p2) / ((1-p1) p2)].

    Infinite for p1=1 (the bound then decays to its t -> inf limit).
    """
    if not 0.0 < p2 < p1 <= 1.0:
        raise ValueError(f"need 0 < p2 < p1 <= 1, got p1={p1}, p2={p2}")
    if p1 == 1.0:
        return math.inf
    return math.log(p1 * (1.0 - p2) / ((1.0 - p1) * p2))


def taylor_sample_size(
    protocol: str,
    regime: str,
    *,
    p_qm: float,
    eps1: float,
    eps2: float,
    delta: float,
    mu: float | None = None,
) -> int:
    """Small-eps2 approximation of the exact planners.

    Uses the leading order of the KL divergence in eps2 at fixed ratio
    x = eps1/eps2: D ~ eps2 (1 - x + x ln x) in the algebraic regime
    (p_qm = 1) and D ~ (eps2 - eps1)^2 / (2 p_qm (1 - p_qm)) otherwise.
    Certification divides by mu. The ratio to the exact planner tends to 1
    as eps2 -> 0 at fixed x; at moderate eps2 it is only indicative.
    """
    if protocol not in ("verification", "certification"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if regime not in ("algebraic", "nonalgebraic"):
        raise ValueError(f"unknown regime {regime!r}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    _check_eps(eps1, eps2, p_qm)
    log_term = math.log(1.0 / delta)
    if regime == "algebraic":
        if abs(p_qm - 1.0) > 1e-12:
            raise ValueError("algebraic regime requires p_qm = 1")
        x = eps1 / eps2
        factor = 1.0 - x + (0.0 if x == 0.0 else x * math.log(x))
        n = log_term / (eps2 * factor)
    else:
        if p_qm >= 1.0:
            raise ValueError("nonalgebraic regime requires p_qm < 1")
        n = 2.0 * p_qm * (1.0 - p_qm) * log_term / (eps2 - eps1) ** 2
    if protocol == "certification":
        if mu is None or not 0.0 < mu <= 1.0:
            raise ValueError("certification requires mu in (0, 1]")
        n /= mu
    return int(math.ceil(n))


@dataclass(frozen=True)
class BoundReport:
    """Planner summary: thresholds, divergence, tail bound, and sample sizes."""

    protocol: str
    regime: str
    p_qm: float
    eps1: float
    eps2: float
    delta: float
    p1: float
    p2: float
    kl: float
    optimal_t: float
    sample_size: int
    taylor_size: int
    tail_bound: float
    mu: float | None = None

    def __post_init__(self):
        if not 0.0 < self.p2 < self.p1 <= self.p_qm <= 1.0:
            raise ValueError("thresholds must satisfy 0 < p2 < p1 <= p_qm <= 1")
        if self.kl < 0.0:
            raise ValueError("divergence must be non-negative")
        if not 0.0 <= self.tail_bound <= 1.0:
            raise ValueError("tail bound must lie in [0, 1]")

    def to_json(self) -> dict:
        obj = {
            "protocol": self.protocol,
            "regime": self.regime,
            "p_QM": self.p_qm,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "delta": self.delta,
            "p1": self.p1,
            "p2": self.p2,
            "kl": self.kl,
            "optimal_t": None if math.isinf(self.optimal_t) else self.optimal_t,
            "sample_size": self.sample_size,
            "taylor_size": self.taylor_size,
            "tail_bound": self.tail_bound,
        }
        if self.mu is not None:
            obj["mu"] = self.mu
        return obj


def bound_report(
    protocol: str,
    p_qm: float,
    eps1: float,
    eps2: float,
    delta: float,
    mu: float | None = None,
) -> BoundReport:
    """Assemble the full planner report for one parameter set."""
    p1, p2 = _check_eps(eps1, eps2, p_qm)
    regime = "algebraic" if abs(p_qm - 1.0) <= 1e-12 else "nonalgebraic"
    kl = kl_divergence(p1, p2)
    if protocol == "verification":
        n = verification_sample_size(p_qm, eps1, eps2, delta)
        tail = verification_tail_bound(p1, p2, n)
    elif protocol == "certification":
        if mu is None:
            raise ValueError("certification report requires mu")
        n = certification_sample_size(mu, p_qm, eps1, eps2, delta)
        tail = certification_tail_bound(mu, p1, p2, n)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    taylor = taylor_sample_size(
        protocol, regime, p_qm=p_qm, eps1=eps1, eps2=eps2, delta=delta, mu=mu,
    )
    return BoundReport(
        protocol=protocol, regime=regime, p_qm=p_qm, eps1=eps1, eps2=eps2,
        delta=delta, p1=p1, p2=p2, kl=kl,
        optimal_t=optimal_t(p1, p2), sample_size=n, taylor_size=taylor,
        tail_bound=tail, mu=mu,
    )


def mean_success(probs: Sequence[float]) -> float:
    return float(np.mean(np.asarray(probs, dtype=float)))
