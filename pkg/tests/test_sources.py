import numpy as np
import pytest

from diqsv.games import RoundRecord
from diqsv.linalg import DensityOperator, depolarize, ghz_state, maximally_mixed
from diqsv.sources import (
    bernoulli_source,
    branch_average_success,
    build_profile,
    conditional_round,
    conditional_win_probability,
    iid_source,
    initial_state,
    mixture_source,
    posterior_update,
    source_from_spec,
    source_from_string,
)


def ghz_mixed_coinflip(copies, w=0.5):
    mixed = DensityOperator(np.eye(8) / 8, (2, 2, 2))
    return mixture_source([w, 1.0 - w], [ghz_state(3), mixed], copies)


def winning_record():
    return RoundRecord((0, 0, 0), (0, 0, 0), True)


def losing_record():
    return RoundRecord((0, 0, 0), (0, 0, 1), False)


class TestConstruction:
    def test_iid(self):
        model = iid_source(ghz_state(3), 100)
        assert model.kind == "iid" and model.copies == 100
        assert model.n_branches == 1

    def test_mixture_weights_validated(self):
        with pytest.raises(ValueError, match="probability"):
            mixture_source([0.7, 0.7], [ghz_state(3), ghz_state(3)], 10)

    def test_branch_length_validated(self):
        g = ghz_state(3).density()
        with pytest.raises(ValueError, match="length 1 or copies"):
            mixture_source([0.5, 0.5], [[g, g], [g]], 3)

    def test_bernoulli_probs_validated(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            bernoulli_source([0.5, 1.2])

    def test_bernoulli_round_prob(self):
        model = bernoulli_source([0.1, 0.2, 0.3])
        assert model.copies == 3
        assert model.round_prob(2) == 0.3
        constant = bernoulli_source(0.95, 7)
        assert constant.round_prob(6) == 0.95

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            mixture_source([0.5, 0.5], [ghz_state(3), maximally_mixed(4)], 5)


class TestConditionalRounds:
    def test_iid_conditional_is_constant(self, mermin):
        game, _, strategy = mermin
        model = iid_source(depolarize(ghz_state(3), 0.2), 10)
        profile = build_profile(model, strategy, game)
        state = initial_state(model)
        rng = np.random.default_rng(3)
        for _ in range(10):
            p, record, state = conditional_round(model, state, strategy, game, rng, profile)
            assert p == pytest.approx(0.9, abs=1e-12)

    def test_coinflip_posterior_after_wins(self, mermin):
        """After k straight wins the target-branch weight is 1/(1 + 2^-k)."""
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(10)
        profile = build_profile(model, strategy, game)
        state = initial_state(model)
        for k in range(6):
            expected_p = (1.0 + 2.0 ** -k * 0.5) / (1.0 + 2.0 ** -k)
            assert conditional_win_probability(model, state, strategy, game, profile) == pytest.approx(expected_p, abs=1e-12)
            state = posterior_update(model, state, winning_record(), strategy, game, profile)
            expected_w = 1.0 / (1.0 + 2.0 ** -(k + 1))
            assert state.posterior[0] == pytest.approx(expected_w, abs=1e-12)

    def test_loss_eliminates_target_branch(self, mermin):
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(5)
        state = posterior_update(model, initial_state(model), losing_record(), strategy, game)
        assert state.posterior[0] == pytest.approx(0.0, abs=1e-12)
        assert state.posterior[1] == pytest.approx(1.0, abs=1e-12)

    def test_impossible_record_rejected(self, mermin):
        game, _, strategy = mermin
        model = iid_source(ghz_state(3), 5)
        with pytest.raises(ValueError, match="exhausted|impossible"):
            state = initial_state(model)
            # GHZ branch only: a losing record has zero likelihood
            posterior_update(
                mixture_source([1.0], [ghz_state(3)], 5), state, losing_record(), strategy, game
            )

    def test_exhausted_source(self, mermin):
        game, _, strategy = mermin
        model = iid_source(ghz_state(3), 1)
        rng = np.random.default_rng(0)
        _, _, state = conditional_round(model, initial_state(model), strategy, game, rng)
        with pytest.raises(ValueError, match="exhausted"):
            conditional_round(model, state, strategy, game, rng)

    def test_round_determinism(self, mermin):
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(8)
        out1 = []
        out2 = []
        for out in (out1, out2):
            rng = np.random.default_rng(99)
            state = initial_state(model)
            for _ in range(8):
                p, rec, state = conditional_round(model, state, strategy, game, rng)
                out.append((p, rec))
        assert out1 == out2

    def test_chained_probabilities_multiply(self, mermin):
        """Pr[first k rounds all win] from the Bayes chain equals the branch average."""
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(8)
        profile = build_profile(model, strategy, game)
        state = initial_state(model)
        chained = 1.0
        for k in range(1, 7):
            chained *= conditional_win_probability(model, state, strategy, game, profile)
            state = posterior_update(model, state, winning_record(), strategy, game, profile)
            direct = 0.5 * 1.0 + 0.5 * 0.5 ** k
            assert chained == pytest.approx(direct, abs=1e-12)

    def test_posterior_remains_distribution(self, mermin):
        game, _, strategy = mermin
        model = mixture_source(
            [0.3, 0.3, 0.4],
            [depolarize(ghz_state(3), 0.1), depolarize(ghz_state(3), 0.6), ghz_state(3)],
            20,
        )
        profile = build_profile(model, strategy, game)
        rng = np.random.default_rng(11)
        state = initial_state(model)
        for _ in range(20):
            _, _, state = conditional_round(model, state, strategy, game, rng, profile)
            assert sum(state.posterior) == pytest.approx(1.0, abs=1e-9)
            assert min(state.posterior) >= 0.0


def full_state_conditional_win(model, strategy, game, records):
    """Conditional win probability computed from the explicit sequence state.

    Builds the full density operator over all rounds, projects the first
    len(records) rounds on the observed effects, partial-traces everything
    except the next round, renormalizes, and applies the Born rule. Uses its
    own partial trace, independent of the library's.
    """
    n = model.copies
    j = len(records)
    d_round = model.branches[0][0].dim
    full = np.zeros((d_round ** n, d_round ** n), dtype=complex)
    for b, w in enumerate(model.weights):
        term = np.array([[1.0 + 0.0j]])
        for k in range(n):
            term = np.kron(term, model.branch_state(b, k).matrix)
        full += w * term
    # effect operator on the measured prefix
    prefix = np.array([[1.0 + 0.0j]])
    for rec in records:
        effect = np.array([[1.0 + 0.0j]])
        for party, (i, o) in enumerate(zip(rec.inputs, rec.outputs)):
            effect = np.kron(effect, strategy.effects[party][i][o])
        prefix = np.kron(prefix, effect)
    op = np.kron(prefix, np.eye(d_round ** (n - j)))
    projected = op @ full
    # trace out all rounds except round j (zero-based)
    t = projected.reshape((d_round,) * n * 2)
    for k in reversed([k for k in range(n) if k != j]):
        rounds_left = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + rounds_left)
    norm = np.trace(t)
    conditional = t / norm
    win = 0.0
    for inputs, q in game.input_distribution.items():
        for outputs in game.win_table[inputs]:
            effect = np.array([[1.0 + 0.0j]])
            for party in range(game.parties):
                effect = np.kron(effect, strategy.effects[party][inputs[party]][outputs[party]])
            win += q * float(np.real(np.trace(effect @ conditional)))
    return win


class TestFullStateEquivalence:
    """Bayesian updates against the explicit sequence-state computation."""

    @pytest.mark.parametrize("n_records", [0, 1, 2])
    def test_coinflip_history(self, mermin, n_records):
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(3)
        records = [winning_record()] * n_records
        state = initial_state(model)
        for rec in records:
            state = posterior_update(model, state, rec, strategy, game)
        bayes = conditional_win_probability(model, state, strategy, game)
        explicit = full_state_conditional_win(model, strategy, game, records)
        assert bayes == pytest.approx(explicit, abs=1e-9)

    def test_random_histories(self, mermin, rng):
        game, _, strategy = mermin
        mixed = DensityOperator(np.eye(8) / 8, (2, 2, 2))
        model = mixture_source(
            [0.35, 0.65],
            [
                [depolarize(ghz_state(3), 0.15), depolarize(ghz_state(3), 0.4), ghz_state(3).density()],
                [mixed, depolarize(ghz_state(3), 0.8), mixed],
            ],
            3,
        )
        profile = build_profile(model, strategy, game)
        for _ in range(6):
            state = initial_state(model)
            records = []
            for _j in range(2):
                _, rec, state = conditional_round(model, state, strategy, game, rng, profile)
                records.append(rec)
                bayes = conditional_win_probability(model, state, strategy, game, profile)
                explicit = full_state_conditional_win(model, strategy, game, records)
                assert bayes == pytest.approx(explicit, abs=1e-9)


class TestBranchAverage:
    def test_iid_depolarized(self, mermin):
        game, _, strategy = mermin
        model = iid_source(depolarize(ghz_state(3), 0.2), 50)
        assert branch_average_success(model, branch=0, strategy=strategy, game=game) == pytest.approx(0.9, abs=1e-12)

    def test_bernoulli_mean(self):
        model = bernoulli_source([0.2, 0.4, 0.9])
        assert branch_average_success(model, branch=0) == pytest.approx(0.5)

    def test_history_replay_converges_to_target_branch(self, mermin):
        game, _, strategy = mermin
        model = ghz_mixed_coinflip(12)
        history = [winning_record()] * 12
        avg = branch_average_success(model, history=history, strategy=strategy, game=game)
        expected = np.mean([(1 + 2.0 ** -k * 0.5) / (1 + 2.0 ** -k) for k in range(12)])
        assert avg == pytest.approx(float(expected), abs=1e-12)

    def test_exactly_one_mode(self, mermin):
        game, _, strategy = mermin
        model = iid_source(ghz_state(3), 3)
        with pytest.raises(ValueError, match="exactly one"):
            branch_average_success(model)


class TestSpecsAndStrings:
    def test_iid_spec(self):
        model = source_from_spec({"kind": "iid", "state": {"name": "ghz", "n": 3}, "n": 25})
        assert model.kind == "iid" and model.copies == 25

    def test_depolarized_spec(self, mermin):
        game, _, strategy = mermin
        model = source_from_spec({"kind": "iid", "state": {"name": "ghz", "n": 3, "depolarize": 0.4}, "n": 5})
        assert branch_average_success(model, branch=0, strategy=strategy, game=game) == pytest.approx(0.8, abs=1e-12)

    def test_mixture_spec(self):
        spec = {
            "kind": "mixture",
            "weights": [0.5, 0.5],
            "branches": [{"name": "ghz", "n": 3}, {"name": "maximally_mixed", "d": 8}],
            "n": 4,
        }
        model = source_from_spec(spec)
        assert model.kind == "mixture" and model.n_branches == 2

    def test_bernoulli_spec(self):
        model = source_from_spec({"kind": "bernoulli", "probs": 0.9, "n": 12})
        assert model.copies == 12 and model.round_prob(0) == 0.9

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown source kind"):
            source_from_spec({"kind": "adversarial"})

    def test_string_shorthands(self):
        assert source_from_string("iid-ghz-depolarized:0.3", 10).kind == "iid"
        assert source_from_string("iid-bernoulli:0.9", 10).kind == "bernoulli"
        coin = source_from_string("coinflip-ghz:0.5", 10)
        assert coin.kind == "mixture" and coin.weights == (0.5, 0.5)
        with pytest.raises(ValueError, match="shorthand"):
            source_from_string("magic:1", 10)
