"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Every tolerance and runtime budget is asserted inside the test.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from diqsv.bounds import (
    allpass_sample_size,
    certification_sample_size,
    dd_sample_size,
    extractability_success_map,
    kl_divergence,
    mgf_bound_raw,
    optimal_t,
    taylor_sample_size,
    verification_sample_size,
)
from diqsv.experiments import (
    certification_oracle,
    default_figure_spec,
    exact_pass_probability,
    figure_rows,
    mc_pass_estimate,
    verification_oracle,
)
from diqsv.games import (
    bell_value,
    classical_optimum,
    deterministic_strategies,
    optimal_strategy,
    standard_game,
    win_probability,
)
from diqsv.linalg import ghz_state
from diqsv.protocols import plan_certification, plan_verification, run_verification
from diqsv.sources import (
    bernoulli_source,
    build_profile,
    conditional_round,
    conditional_win_probability,
    iid_source,
    initial_state,
    source_from_string,
)

from test_sources import full_state_conditional_win, ghz_mixed_coinflip

SQRT2 = math.sqrt(2.0)
RATIO_TARGET = 2.0 * (2.0 + SQRT2) / 3.0


class _Budget:
    def __init__(self, seconds, label):
        self.seconds = seconds
        self.label = label

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.seconds, f"{self.label}: took {elapsed:.1f}s, budget {self.seconds}s"
            print(f"PASS {self.label} ({elapsed:.2f} s)")
        return False


def test_criterion_1_di_dd_constant_factor():
    with _Budget(1.0, "criterion 1: DI/DD sample-size ratio 2(2+sqrt2)/3"):
        spec = default_figure_spec("fig2a")
        assert spec.c == pytest.approx((2.0 - SQRT2) / 4.0)
        assert spec.nu == pytest.approx(1.0 / 3.0)
        assert spec.delta == 1e-4
        rows = figure_rows(spec)
        assert rows and all(eta <= 0.01 for eta, *_ in rows)
        for eta, n_di, n_dd, ratio in rows:
            assert n_di == allpass_sample_size(spec.c, eta, spec.delta)
            assert n_dd == dd_sample_size(spec.nu, eta, spec.delta)
            assert abs(ratio / RATIO_TARGET - 1.0) < 0.02


def test_criterion_2_confidence_growth_reconstruction():
    with _Budget(1.0, "criterion 2: threshold floor and confidence growth"):
        _, model = standard_game("mermin3")
        floor = extractability_success_map(model, "success_to_floor", 0.95).value
        assert floor == pytest.approx(1.0 - 0.05 / (2.0 - SQRT2), abs=1e-12)
        assert abs(floor - 0.90) < 0.02
        spec = default_figure_spec("fig2b")
        assert spec.p1 == 0.95 and spec.c == pytest.approx(2.0 - SQRT2)
        rows = figure_rows(spec)
        for eta in spec.etas:
            assert spec.c * eta > 0.05  # threshold exceeds the ruled-out rate
            curve = [c for (_n, e, c) in rows if e == eta]
            assert all(a <= b for a, b in zip(curve, curve[1:]))
            assert all(a < b for a, b in zip(curve, curve[1:]) if b < 1.0 - 1e-12)
            # confidence 0.99 reachable at finite N
            d = kl_divergence(spec.p1, 1.0 - spec.c * eta)
            n99 = math.ceil(math.log(100.0) / d)
            assert 1.0 - math.exp(-d * n99) >= 0.99


def test_criterion_3_certification_confidence_reconstruction():
    with _Budget(1.0, "criterion 3: certification confidence curves"):
        spec = default_figure_spec("fig3")
        assert spec.mu == 0.5 and spec.p1 == 0.98
        rows = figure_rows(spec)
        curves = {eta: [c for (_n, e, c) in rows if e == eta] for eta in spec.etas}
        for eta in spec.etas:
            curve = curves[eta]
            assert all(a <= b for a, b in zip(curve, curve[1:]))
            assert all(a < b for a, b in zip(curve, curve[1:]) if b < 1.0 - 1e-12)
        for lo, hi in zip(sorted(spec.etas), sorted(spec.etas)[1:]):
            assert all(a <= b + 1e-15 for a, b in zip(curves[lo], curves[hi]))


def test_criterion_4_verification_bound_validity():
    with _Budget(30.0, "criterion 4: exact tail never exceeds e^{-D N}"):
        rng = np.random.default_rng(20240804)
        for k in range(1000):
            n = int(rng.integers(2, 201))
            p1 = float(rng.uniform(0.5, 0.995))
            p2 = float(rng.uniform(0.05, p1 - 0.01))
            if k % 3 == 0:
                probs = np.full(n, p2)
            else:
                raw = rng.random(n)
                probs = np.clip(raw * (p2 / raw.mean()), 0.0, 1.0)
            res = verification_oracle(probs, p1, p2)
            assert res.slack >= -1e-12


def test_criterion_5_certification_bound_validity():
    with _Budget(60.0, "criterion 5: exact two-stage tail never exceeds its bound"):
        rng = np.random.default_rng(20240805)
        for k in range(500):
            n = int(rng.integers(2, 121))
            mu = float(rng.uniform(0.05, 1.0))
            p1 = float(rng.uniform(0.5, 0.995))
            p2 = float(rng.uniform(0.05, p1 - 0.01))
            if k % 3 == 0:
                probs = np.full(n, p2)
            else:
                raw = rng.random(n)
                probs = np.clip(raw * (p2 / raw.mean()), 0.0, 1.0)
            res = certification_oracle(probs, mu, p1, p2)
            assert res.slack >= -1e-12
        # mu = 1 reduces to the verification bound and oracle
        for _ in range(25):
            n = int(rng.integers(2, 121))
            p1 = float(rng.uniform(0.5, 0.99))
            p2 = float(rng.uniform(0.1, p1 - 0.01))
            probs = np.full(n, p2)
            cert = certification_oracle(probs, 1.0, p1, p2)
            ver = verification_oracle(probs, p1, p2)
            assert cert.bound == pytest.approx(ver.bound, rel=1e-12)
            assert cert.exact_probability == pytest.approx(ver.exact_probability, abs=1e-12)


def _bracketed_minimum(f, hi=1.0):
    while f(hi * 2.0) < f(hi):
        hi *= 2.0
        if hi > 1e6:
            break
    res = minimize_scalar(f, bounds=(1e-12, hi * 2.0), method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def test_criterion_6_moment_bound_consistency_and_taylor():
    with _Budget(10.0, "criterion 6: f(t*) identity, numeric minimum, Taylor limits"):
        rng = np.random.default_rng(20240806)
        for _ in range(1000):
            p2 = float(rng.uniform(0.05, 0.9))
            p1 = float(rng.uniform(p2 + 0.02, 0.995))
            mu = float(rng.uniform(0.05, 1.0))
            t_star = optimal_t(p1, p2)
            base = 1.0 - mu + mu * math.exp(-kl_divergence(p1, p2))
            assert abs(mgf_bound_raw(t_star, mu, p1, p2) - base) < 1e-9
        # numeric minimization agrees with the closed form
        for _ in range(1000):
            p2 = float(rng.uniform(0.1, 0.85))
            p1 = float(rng.uniform(p2 + 0.05, 0.99))
            mu = float(rng.uniform(0.1, 1.0))
            t_num = _bracketed_minimum(lambda t: mgf_bound_raw(t, mu, p1, p2))
            assert abs(t_num - optimal_t(p1, p2)) < 1e-6
        # Taylor/exact ratio tends to 1 at fixed eps1/eps2 = 0.4
        chsh_p = (2.0 + SQRT2) / 4.0
        for protocol, mu in (("verification", None), ("certification", 0.5)):
            for p_qm in (1.0, chsh_p):
                regime = "algebraic" if p_qm == 1.0 else "nonalgebraic"
                gaps = []
                for eps2 in (0.05, 0.01, 0.002):
                    eps1 = 0.4 * eps2
                    taylor = taylor_sample_size(
                        protocol, regime, p_qm=p_qm, eps1=eps1, eps2=eps2, delta=0.01, mu=mu
                    )
                    if protocol == "verification":
                        exact = verification_sample_size(p_qm, eps1, eps2, 0.01)
                    else:
                        exact = certification_sample_size(mu, p_qm, eps1, eps2, 0.01)
                    gaps.append(abs(taylor / exact - 1.0))
                assert gaps[0] > gaps[1] > gaps[2], (protocol, p_qm, gaps)
                assert gaps[-1] < 0.05, (protocol, p_qm, gaps)


def test_criterion_7_game_ground_truth():
    with _Budget(1.0, "criterion 7: Mermin/CHSH classical and quantum optima"):
        game, model = standard_game("mermin3")
        strategies = list(deterministic_strategies(game))
        assert len(strategies) == 64
        best_win, best_bell = classical_optimum(game)
        assert best_win == pytest.approx(0.75, abs=1e-12)
        assert best_bell == pytest.approx(2.0, abs=1e-12)
        strategy = optimal_strategy(game)
        assert win_probability(game, strategy) == pytest.approx(1.0, abs=1e-9)
        assert bell_value(game, strategy) == pytest.approx(4.0, abs=1e-9)
        cgame, cmodel = standard_game("chsh")
        cstrategy = optimal_strategy(cgame)
        assert win_probability(cgame, cstrategy) == pytest.approx((2.0 + SQRT2) / 4.0, abs=1e-9)
        assert bell_value(cgame, cstrategy) == pytest.approx(2.0 * SQRT2, abs=1e-9)


def test_criterion_8_product_bound_extremality():
    with _Budget(5.0, "criterion 8: uniform deficit maximizes the all-pass product"):
        rng = np.random.default_rng(20240808)
        c = 2.0 - SQRT2
        for k in range(1000):
            n = int(rng.integers(1, 9))
            if k % 10 == 0:
                etas = np.full(n, float(rng.uniform(0.0, 1.0)))
            else:
                etas = rng.uniform(0.0, 1.0, size=n)
            product = float(np.prod(1.0 - c * etas))
            am_bound = float((1.0 - c * etas.mean()) ** n)
            assert product <= am_bound + 1e-12
            if np.ptp(etas) > 1e-6:
                assert product < am_bound
            else:
                assert abs(product - am_bound) <= 1e-12


def test_criterion_9_end_to_end_monte_carlo():
    with _Budget(300.0, "criterion 9: protocol pass rates against planner guarantees"):
        game, model = standard_game("mermin3")

        vplan = plan_verification(game, model, eta=0.1, eps1=0.03, delta=0.01)
        boundary = bernoulli_source(vplan.p2, vplan.n_copies)
        res = mc_pass_estimate(vplan, boundary, trials=10_000, master_seed=90)
        assert res.rate <= vplan.delta + 3.0 * res.stderr + 1e-9

        cplan = plan_certification(game, model, eta_c=0.2, mu=0.5, eps1=0.03, delta=0.01)
        cboundary = bernoulli_source(cplan.p2, cplan.n_copies)
        cres = mc_pass_estimate(cplan, cboundary, trials=10_000, master_seed=91)
        assert cres.rate <= cplan.delta + 3.0 * cres.stderr + 1e-9

        perfect = iid_source(ghz_state(3), vplan.n_copies)
        pres = mc_pass_estimate(vplan, perfect, trials=300, master_seed=92)
        assert pres.rate == 1.0

        # correlated coin-flip source under the sequential protocol
        coin = source_from_string("coinflip-ghz:0.5", vplan.n_copies)
        trials = 400
        seeds = np.random.SeedSequence(93).spawn(trials)
        chi_play = []
        psi_play = []
        for seed in seeds:
            transcript, verdict = run_verification(vplan, coin, seed)
            if transcript.n_wins == transcript.n_measured:
                psi_play.append(verdict.success)
            else:
                chi_play.append(verdict.success)
        # the target branch never loses, so every all-win run must succeed
        assert all(psi_play)
        # branch split is a fair coin
        frac_psi = len(psi_play) / trials
        assert abs(frac_psi - 0.5) <= 3.0 * math.sqrt(0.25 / trials)
        # runs that realized the mixed branch fail at the predicted rate
        chi_pass_pred = exact_pass_probability(np.full(vplan.n_copies, 0.5), vplan.p1)
        n_chi = len(chi_play)
        observed = sum(chi_play) / n_chi
        assert abs(observed - chi_pass_pred) <= 3.0 * math.sqrt(max(chi_pass_pred * (1 - chi_pass_pred), 1.0 / n_chi) / n_chi)


def test_criterion_10_conditional_state_equivalence():
    with _Budget(10.0, "criterion 10: Bayesian vs explicit sequence-state conditioning"):
        game, _ = standard_game("mermin3")
        strategy = optimal_strategy(game)
        rng = np.random.default_rng(20240810)
        for copies in (2, 3):
            coin = ghz_mixed_coinflip(copies)
            profile = build_profile(coin, strategy, game)
            for _ in range(8):
                state = initial_state(coin)
                records = []
                for _j in range(copies - 1):
                    _, rec, state = conditional_round(coin, state, strategy, game, rng, profile)
                    records.append(rec)
                    bayes = conditional_win_probability(coin, state, strategy, game, profile)
                    explicit = full_state_conditional_win(coin, strategy, game, records)
                    assert abs(bayes - explicit) < 1e-9
