"""Executable verification and certification protocols.

Verification measures every copy the source emits and, when the observed
success rate P reaches the acceptance threshold p1, claims a floor on the
average (conditional) extractability of the measured sequence with
confidence 1 - delta. Certification measures each copy with probability mu
and, on success of the measured fraction, claims an extractability floor
for the copies left unmeasured.

Randomness is split into two child streams of the run seed: one for the
measure-or-keep coins, one for the round outcomes. Verification never
touches the coin stream, which makes a certification run with mu = 1
reproduce the verification run for the same seed exactly.

The success comparison P >= p1 is carried out in exact rational arithmetic
(win counts against ceil(p1 * N1)); ties count as successes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bounds
from .games import NonlocalGame, QuantumStrategy, RobustnessModel, optimal_strategy, score_round
from .sources import SourceModel, build_profile, conditional_round, initial_state


@dataclass(frozen=True)
class VerificationPlan:
    game: NonlocalGame
    robustness: RobustnessModel
    eta: float
    eps1: float
    eps2: float
    delta: float
    p1: float
    p2: float
    n_copies: int
    halt_on_failure: bool = False

    def __post_init__(self):
        if self.eps1 >= self.eps2:
            raise ValueError("eps1 must be smaller than eps2")
        if self.halt_on_failure and (self.eps1 > 0.0 or not self.robustness.algebraic):
            raise ValueError("halt-on-failure applies only to the all-pass mode of algebraic games")


@dataclass(frozen=True)
class CertificationPlan:
    game: NonlocalGame
    robustness: RobustnessModel
    eta_c: float
    mu: float
    eps1: float
    eps2: float
    delta: float
    p1: float
    p2: float
    n_copies: int

    def __post_init__(self):
        if self.eps1 >= self.eps2:
            raise ValueError("eps1 must be smaller than eps2")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"measurement probability mu must lie in (0, 1], got {self.mu}")


@dataclass(frozen=True)
class Transcript:
    """Columnar record of one protocol run."""

    measured: np.ndarray            # bool, shape (N,)
    inputs: np.ndarray              # int, shape (N, parties), -1 where unmeasured
    outputs: np.ndarray             # int, shape (N, parties), -1 where unmeasured
    wins: np.ndarray                # bool, shape (N,), False where unmeasured
    conditional_probs: np.ndarray   # float, shape (N,), nan where unmeasured

    @property
    def n_rounds(self) -> int:
        return int(self.measured.size)

    @property
    def n_measured(self) -> int:
        return int(self.measured.sum())

    @property
    def n_wins(self) -> int:
        return int(self.wins[self.measured].sum())

    @property
    def success_rate(self) -> float | None:
        n1 = self.n_measured
        return None if n1 == 0 else self.n_wins / n1

    @property
    def certificate_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.measured)

    def to_json(self) -> dict:
        return {
            "measured": self.measured.astype(int).tolist(),
            "inputs": self.inputs.tolist(),
            "outputs": self.outputs.tolist(),
            "wins": self.wins.astype(int).tolist(),
            "conditional_probs": [None if math.isnan(p) else p for p in self.conditional_probs.tolist()],
            "n_measured": self.n_measured,
            "n_wins": self.n_wins,
            "success_rate": self.success_rate,
            "certificate_indices": self.certificate_indices.tolist(),
        }

    def to_csv(self) -> str:
        """Round log: round,measured,i1..in,o1..on,win."""
        parties = self.inputs.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = (
            ["round", "measured"]
            + [f"i{p + 1}" for p in range(parties)]
            + [f"o{p + 1}" for p in range(parties)]
            + ["win"]
        )
        writer.writerow(header)
        for k in range(self.n_rounds):
            if self.measured[k]:
                row = (
                    [k, 1]
                    + [int(x) for x in self.inputs[k]]
                    + [int(x) for x in self.outputs[k]]
                    + [int(self.wins[k])]
                )
            else:
                row = [k, 0] + [""] * (2 * parties) + [""]
            writer.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class Verdict:
    outcome: str                 # "success" | "inconclusive"
    q1: int
    n1: int
    observed_rate: float | None
    claim: dict | None
    note: str = ""

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "q1": self.q1,
            "n1": self.n1,
            "observed_rate": self.observed_rate,
            "claim": self.claim,
            "note": self.note,
        }


def plan_verification(
    game: NonlocalGame,
    robustness: RobustnessModel,
    eta: float,
    eps1: float,
    delta: float,
    *,
    halt_on_failure: bool = False,
) -> VerificationPlan:
    """Fix thresholds and sample size for a verification run.

    ``eta`` is the extractability deficit to rule out; the success-rate
    tolerance eps2 = c * eta follows from the robustness constant, and
    eps1 < eps2 is the accepted departure from the quantum bound.
    """
    c = robustness.require_c()
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    eps2 = c * eta
    n = bounds.verification_sample_size(robustness.p_qm, eps1, eps2, delta)
    return VerificationPlan(
        game=game, robustness=robustness, eta=eta, eps1=eps1, eps2=eps2,
        delta=delta, p1=robustness.p_qm - eps1, p2=robustness.p_qm - eps2,
        n_copies=n, halt_on_failure=halt_on_failure,
    )


def plan_certification(
    game: NonlocalGame,
    robustness: RobustnessModel,
    eta_c: float,
    mu: float,
    eps1: float,
    delta: float,
) -> CertificationPlan:
    """Fix thresholds and sample size for a certification run.

    ``eta_c`` is the extractability deficit to rule out on the unmeasured
    copies; inverting the certificate floor gives eps2 = c * eta_c * (1-mu).
    """
    c = robustness.require_c()
    if not 0.0 < eta_c < 1.0:
        raise ValueError(f"eta_c must lie in (0, 1), got {eta_c}")
    if not 0.0 < mu < 1.0:
        raise ValueError(f"no certificate remains unless mu lies in (0, 1), got {mu}")
    eps2 = c * eta_c * (1.0 - mu)
    n = bounds.certification_sample_size(mu, robustness.p_qm, eps1, eps2, delta)
    return CertificationPlan(
        game=game, robustness=robustness, eta_c=eta_c, mu=mu, eps1=eps1,
        eps2=eps2, delta=delta, p1=robustness.p_qm - eps1,
        p2=robustness.p_qm - eps2, n_copies=n,
    )


def _passes(q1: int, n1: int, p1: float) -> bool:
    return n1 > 0 and q1 >= bounds.pass_threshold(p1, n1)


def _empty_columns(n: int, parties: int):
    inputs = np.full((n, parties), -1, dtype=np.int64)
    outputs = np.full((n, parties), -1, dtype=np.int64)
    wins = np.zeros(n, dtype=bool)
    probs = np.full(n, np.nan)
    return inputs, outputs, wins, probs


def _rngs(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    coins, rounds = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(coins)), np.random.Generator(np.random.PCG64(rounds))


def _play_measured_rounds(
    plan,
    source: SourceModel,
    measured: np.ndarray,
    rounds_rng: np.random.Generator,
    strategy: QuantumStrategy | None,
    halt_on_failure: bool = False,
) -> Transcript:
    n = measured.size
    if source.copies < n:
        raise ValueError(f"source provides {source.copies} copies but the plan needs {n}")
    if source.kind == "bernoulli":
        inputs, outputs, wins, probs = _empty_columns(n, 0)
        idx = np.flatnonzero(measured)
        p = np.array([source.round_prob(int(j)) for j in idx])
        draws = rounds_rng.random(idx.size)
        wins[idx] = draws < p
        probs[idx] = p
        if halt_on_failure:
            losses = idx[~wins[idx]]
            if losses.size:
                cut = int(losses[0]) + 1
                measured = measured.copy()
                measured[cut:] = False
                wins[cut:] = False
                probs[cut:] = np.nan
        return Transcript(measured, inputs, outputs, wins, probs)
    if strategy is None:
        strategy = optimal_strategy(plan.game)
    profile = build_profile(source, strategy, plan.game)
    inputs, outputs, wins, probs = _empty_columns(n, plan.game.parties)
    state = initial_state(source)
    measured = measured.copy()
    for j in range(n):
        if not measured[j]:
            # unmeasured copies advance the round index without conditioning
            from .sources import SourceState

            state = SourceState(state.round_index + 1, state.posterior, state.history)
            continue
        p_cond, record, state = conditional_round(
            source, state, strategy, plan.game, rounds_rng, profile, keep_history=False
        )
        inputs[j] = record.inputs
        outputs[j] = record.outputs
        wins[j] = record.win
        probs[j] = p_cond
        if halt_on_failure and not record.win:
            measured[j + 1 :] = False
            break
    return Transcript(measured, inputs, outputs, wins, probs)


def run_verification(
    plan: VerificationPlan,
    source: SourceModel,
    seed,
    strategy: QuantumStrategy | None = None,
) -> tuple[Transcript, Verdict]:
    """Measure all copies sequentially and compare the success rate to p1."""
    _, rounds_rng = _rngs(seed)
    measured = np.ones(plan.n_copies, dtype=bool)
    transcript = _play_measured_rounds(
        plan, source, measured, rounds_rng, strategy, plan.halt_on_failure
    )
    q1, n1 = transcript.n_wins, transcript.n_measured
    if plan.halt_on_failure and n1 < plan.n_copies:
        verdict = Verdict("inconclusive", q1, n1, transcript.success_rate, None, note="halted on first failed round")
        return transcript, verdict
    if _passes(q1, n1, plan.p1):
        claim = {
            "quantity": "average_conditional_extractability" if source.kind == "mixture" else "average_extractability",
            "floor": 1.0 - plan.eta,
            "confidence": 1.0 - plan.delta,
        }
        return transcript, Verdict("success", q1, n1, transcript.success_rate, claim)
    return transcript, Verdict("inconclusive", q1, n1, transcript.success_rate, None)


def run_certification(
    plan: CertificationPlan,
    source: SourceModel,
    seed,
    strategy: QuantumStrategy | None = None,
) -> tuple[Transcript, Verdict]:
    """Measure a mu-fraction of the copies; on success, certify the rest.

    Correlated (mixture) sources are rejected: the certificate floor is
    derived for independent copies only.
    """
    if source.kind == "mixture":
        raise ValueError("certification requires independent copies; mixture sources are not supported")
    coins_rng, rounds_rng = _rngs(seed)
    n = plan.n_copies
    measured = coins_rng.random(n) < plan.mu
    transcript = _play_measured_rounds(plan, source, measured, rounds_rng, strategy)
    q1, n1 = transcript.n_wins, transcript.n_measured
    rate = transcript.success_rate
    if n1 == 0:
        return transcript, Verdict("inconclusive", 0, 0, None, None, note="no rounds measured")
    if not _passes(q1, n1, plan.p1):
        return transcript, Verdict("inconclusive", q1, n1, rate, None)
    claim = {
        "quantity": "certificate_average_extractability",
        "confidence": 1.0 - plan.delta,
        "eta_c": plan.eta_c,
    }
    note = ""
    if n1 < n:
        floor = bounds.certificate_success_floor(plan.p2, plan.robustness.p_qm, n, n1, plan.mu)
        mapped = bounds.extractability_success_map(plan.robustness, "success_to_floor", floor.exact)
        claim["certificate_success_floor"] = floor.exact
        claim["floor"] = mapped.value
        claim["floor_clamped"] = mapped.clamped
        approx = bounds.extractability_success_map(plan.robustness, "success_to_floor", floor.mu_approx)
        claim["floor_mu_approx"] = approx.value
    else:
        note = "no certificate remains: every copy was measured"
    return transcript, Verdict("success", q1, n1, rate, claim, note=note)


def replay_win_count(transcript: Transcript, game: NonlocalGame) -> int:
    """Re-score the measured rounds through the game predicate."""
    total = 0
    for k in range(transcript.n_rounds):
        if transcript.measured[k]:
            total += score_round(game, tuple(transcript.inputs[k]), tuple(transcript.outputs[k]))
    return total
