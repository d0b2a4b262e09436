"""Exact oracles for the tail bounds, Monte Carlo harness, figure datasets.

The oracles compute pass probabilities of the two protocols exactly for
arbitrary per-round success probabilities (Poisson-binomial tail for
verification; a three-index dynamic program over coin and outcome counts
for certification) and compare them against the closed-form bounds. The
Monte Carlo harness replays full protocol runs over deterministically
derived per-trial seeds, so results are reproducible and independent of the
worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bounds
from ._kernels import certification_pass_probability, pb_tail_probability
from .protocols import CertificationPlan, VerificationPlan, run_certification, run_verification
from .sources import SourceModel

MAX_ORACLE_N = 5000
MAX_CERT_ORACLE_N = 300

_SLACK_FLOOR = -1e-12


@dataclass(frozen=True)
class OracleResult:
    """Exact pass probability against its closed-form bound."""

    exact_probability: float
    bound: float
    slack: float

    def __post_init__(self):
        if self.slack < _SLACK_FLOOR:
            raise ValueError(f"bound violated: exact exceeds bound by {-self.slack}")

    def to_json(self) -> dict:
        return {
            "exact_probability": self.exact_probability,
            "bound": self.bound,
            "slack": self.slack,
        }


def exact_pass_probability(success_probs: Sequence[float], p1: float) -> float:
    """Pr[success rate >= p1] for independent rounds, exact to ~1e-12."""
    probs = np.asarray(success_probs, dtype=float)
    if probs.size == 0:
        raise ValueError("need at least one round")
    if probs.size > MAX_ORACLE_N:
        raise ValueError(f"oracle supports up to {MAX_ORACLE_N} rounds, got {probs.size}")
    threshold = bounds.pass_threshold(p1, probs.size)
    return pb_tail_probability(probs, threshold)


def exact_certification_pass_probability(success_probs: Sequence[float], mu: float, p1: float) -> float:
    """Pr[q1/N1 >= p1] marginalized over the mu-biased measurement coins.

    The empty split N1 = 0 counts as a non-pass (the protocol reports
    inconclusive), so its (1-mu)^N mass never contributes.
    """
    probs = np.asarray(success_probs, dtype=float)
    if probs.size == 0:
        raise ValueError("need at least one round")
    if probs.size > MAX_CERT_ORACLE_N:
        raise ValueError(f"oracle supports up to {MAX_CERT_ORACLE_N} rounds, got {probs.size}")
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    thresholds = np.array([bounds.pass_threshold(p1, m) for m in range(probs.size + 1)], dtype=np.int64)
    return certification_pass_probability(probs, mu, thresholds)


def verification_oracle(success_probs: Sequence[float], p1: float, p2: float | None = None) -> OracleResult:
    """Exact verification pass probability vs exp(-D(p1||p2) N); p2 defaults to the mean."""
    probs = np.asarray(success_probs, dtype=float)
    if p2 is None:
        p2 = float(probs.mean())
    exact = exact_pass_probability(probs, p1)
    bound = bounds.verification_tail_bound(p1, p2, probs.size)
    return OracleResult(exact, bound, bound - exact)


def certification_oracle(
    success_probs: Sequence[float], mu: float, p1: float, p2: float | None = None
) -> OracleResult:
    """Exact certification pass probability vs [1 - mu + mu e^{-D}]^N."""
    probs = np.asarray(success_probs, dtype=float)
    if p2 is None:
        p2 = float(probs.mean())
    exact = exact_certification_pass_probability(probs, mu, p1)
    bound = bounds.certification_tail_bound(mu, p1, p2, probs.size)
    return OracleResult(exact, bound, bound - exact)


@dataclass(frozen=True)
class McResult:
    rate: float
    stderr: float
    trials: int
    successes: int

    def to_json(self) -> dict:
        return {"rate": self.rate, "stderr": self.stderr, "trials": self.trials, "successes": self.successes}


def _mc_chunk(args) -> int:
    plan, source, seeds = args
    runner = run_certification if isinstance(plan, CertificationPlan) else run_verification
    return sum(1 for s in seeds if runner(plan, source, s)[1].success)


def mc_pass_estimate(
    plan: VerificationPlan | CertificationPlan,
    source: SourceModel,
    trials: int,
    master_seed,
    workers: int = 1,
) -> McResult:
    """Empirical pass rate over ``trials`` protocol runs with derived seeds.

    Per-trial seeds are children of the master seed, so the estimate is
    identical for any worker count and any chunking.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    ss = master_seed if isinstance(master_seed, np.random.SeedSequence) else np.random.SeedSequence(master_seed)
    seeds = ss.spawn(trials)
    if workers <= 1:
        successes = _mc_chunk((plan, source, seeds))
    else:
        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            successes = sum(pool.map(_mc_chunk, [(plan, source, c) for c in chunks]))
    rate = successes / trials
    stderr = math.sqrt(rate * (1.0 - rate) / trials)
    return McResult(rate=rate, stderr=stderr, trials=trials, successes=successes)


FIGURE_COLUMNS = {
    "fig2a": ("eta", "N_DI", "N_DD", "ratio"),
    "fig2b": ("N", "eta", "confidence"),
    "fig3": ("N", "eta_c", "confidence"),
}

_C_DEFAULT = 2.0 - math.sqrt(2.0)
_C_QUARTER = (2.0 - math.sqrt(2.0)) / 4.0


@dataclass(frozen=True)
class FigureSpec:
    """Parameter grid behind one dataset; serialized next to the CSV."""

    figure_id: str
    etas: tuple[float, ...]
    n_grid: tuple[int, ...] = ()
    c: float = _C_DEFAULT
    nu: float = 1.0 / 3.0
    mu: float = 0.5
    p1: float = 0.95
    delta: float = 1e-4

    def __post_init__(self):
        if self.figure_id not in FIGURE_COLUMNS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")
        if not self.etas:
            raise ValueError("eta grid must be non-empty")
        if self.figure_id in ("fig2b", "fig3") and not self.n_grid:
            raise ValueError("confidence figures need an N grid")

    def to_json(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "etas": list(self.etas),
            "n_grid": list(self.n_grid),
            "c": self.c,
            "nu": self.nu,
            "mu": self.mu,
            "p1": self.p1,
            "delta": self.delta,
            "columns": list(FIGURE_COLUMNS[self.figure_id]),
        }


def default_figure_spec(figure_id: str, **overrides) -> FigureSpec:
    """Reconstruction defaults; eta and N grids are chosen to land the curves
    in a readable window and can be overridden freely."""
    if figure_id == "fig2a":
        base = dict(
            figure_id="fig2a",
            etas=tuple(float(x) for x in np.geomspace(1e-4, 1e-2, 25)),
            c=_C_QUARTER,
            nu=1.0 / 3.0,
            delta=1e-4,
        )
    elif figure_id == "fig2b":
        base = dict(
            figure_id="fig2b",
            etas=(0.10, 0.12, 0.15, 0.20),
            n_grid=tuple(range(10, 2001, 10)),
            c=_C_DEFAULT,
            p1=0.95,
            delta=1e-4,
        )
    elif figure_id == "fig3":
        base = dict(
            figure_id="fig3",
            etas=(0.10, 0.15, 0.20, 0.30),
            n_grid=tuple(range(25, 6001, 25)),
            c=_C_DEFAULT,
            mu=0.5,
            p1=0.98,
            delta=1e-4,
        )
    else:
        raise ValueError(f"unknown figure id {figure_id!r}")
    base.update(overrides)
    return FigureSpec(**base)


def figure_rows(spec: FigureSpec) -> list[tuple]:
    """Compute the dataset rows for one figure."""
    rows: list[tuple] = []
    if spec.figure_id == "fig2a":
        for eta in spec.etas:
            n_di = bounds.allpass_sample_size(spec.c, eta, spec.delta)
            n_dd = bounds.dd_sample_size(spec.nu, eta, spec.delta)
            rows.append((eta, n_di, n_dd, n_di / n_dd))
        return rows
    if spec.figure_id == "fig2b":
        for eta in spec.etas:
            p2 = 1.0 - spec.c * eta
            if p2 >= spec.p1:
                raise ValueError(f"eta={eta} gives p2={p2} >= p1={spec.p1}; confidence never grows")
            if p2 <= 0.0:
                raise ValueError(f"eta={eta} gives p2={p2} <= 0")
            d = bounds.kl_divergence(spec.p1, p2)
            for n in spec.n_grid:
                rows.append((n, eta, 1.0 - math.exp(-d * n)))
        return rows
    for eta_c in spec.etas:  # fig3
        eps2 = spec.c * eta_c * (1.0 - spec.mu)
        p2 = 1.0 - eps2
        if p2 >= spec.p1:
            raise ValueError(f"eta_c={eta_c} gives p2={p2} >= p1={spec.p1}")
        if p2 <= 0.0:
            raise ValueError(f"eta_c={eta_c} gives p2={p2} <= 0")
        d = bounds.kl_divergence(spec.p1, p2)
        base = 1.0 - spec.mu + spec.mu * math.exp(-d)
        for n in spec.n_grid:
            rows.append((n, eta_c, 1.0 - base ** n))
    return rows


def figure_dataset(spec: FigureSpec, out_dir: str) -> tuple[str, str]:
    """Write <figure_id>.csv and a <figure_id>.json sidecar; returns both paths.

    Output is bit-identical across runs for a fixed spec: floats are written
    in shortest round-trip representation and no timestamps are recorded.
    """
    rows = figure_rows(spec)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{spec.figure_id}.csv")
    json_path = os.path.join(out_dir, f"{spec.figure_id}.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIGURE_COLUMNS[spec.figure_id])
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    with open(json_path, "w") as fh:
        json.dump(spec.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
