"""Nonlocal games, quantum strategies, and exact win probabilities.

A game is played by ``parties`` non-communicating boxes. A referee draws an
input tuple from the game's distribution, each box answers with one bit, and
the round is won when the predicate accepts the (inputs, outputs) pair. Two
standard games ship with the library:

- ``mermin3``: the three-party GHZ game in its canonical labelling, with
  inputs uniform over {(0,0,0), (0,1,1), (1,0,1), (1,1,0)} and a win iff
  the XOR of the outputs equals the OR of the inputs. The quantum optimum
  is 1 (algebraic), the classical optimum 3/4. Measuring X on input 0 and
  Y on input 1 of a GHZ state wins every round.
- ``chsh``: two parties, uniform inputs, win iff the XOR of the outputs
  equals the AND of the inputs. Quantum optimum (2+sqrt(2))/4, classical 3/4.

Each game records the affine map between win probability and the value of
its associated two-outcome correlator functional (value = slope * win +
intercept), so functional values and win rates can be converted exactly.
Output bit 0 corresponds to the +1 outcome of the party's observable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TOL,
    BinaryMeasurement,
    DensityOperator,
    bell_state,
    ghz_state,
    tensor_all,
)

MERMIN_C_DEFAULT = 2.0 - math.sqrt(2.0)
MERMIN_C_ALT = (2.0 - math.sqrt(2.0)) / 4.0
CHSH_P_QM = (2.0 + math.sqrt(2.0)) / 4.0


@dataclass(frozen=True)
class RobustnessModel:
    """Constants tying a game's score to extractability of its target state.

    ``c`` is the success-probability slope (win deficit = c * extractability
    deficit); ``c_tilde`` the functional-side slope. When both are present
    they must satisfy c = 1/(b_q * c_tilde).
    """

    p_qm: float
    p_l: float
    b_q: float
    b_l: float
    algebraic: bool
    c: float | None = None
    c_tilde: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_l < self.p_qm <= 1.0):
            raise ValueError(f"need 0 <= p_l < p_qm <= 1, got p_l={self.p_l}, p_qm={self.p_qm}")
        if self.c is not None and self.c <= 0.0:
            raise ValueError(f"robustness constant c must be positive, got {self.c}")
        if self.c is not None and self.c_tilde is not None:
            if abs(self.c - 1.0 / (self.b_q * self.c_tilde)) > TOL:
                raise ValueError("inconsistent constants: c != 1/(b_q * c_tilde)")

    def with_c(self, c: float) -> "RobustnessModel":
        """Copy of the model with a different success-side constant."""
        return RobustnessModel(self.p_qm, self.p_l, self.b_q, self.b_l, self.algebraic, c, 1.0 / (self.b_q * c))

    def require_c(self) -> float:
        if self.c is None:
            raise ValueError("robustness constant c is not set for this game; supply it explicitly")
        return self.c

    def to_json(self) -> dict:
        return {
            "p_QM": self.p_qm,
            "p_L": self.p_l,
            "b_Q": self.b_q,
            "b_L": self.b_l,
            "algebraic": self.algebraic,
            "c": self.c,
            "c_tilde": self.c_tilde,
        }

    @staticmethod
    def from_json(obj: dict) -> "RobustnessModel":
        return RobustnessModel(
            p_qm=float(obj["p_QM"]),
            p_l=float(obj["p_L"]),
            b_q=float(obj["b_Q"]),
            b_l=float(obj["b_L"]),
            algebraic=bool(obj["algebraic"]),
            c=None if obj.get("c") is None else float(obj["c"]),
            c_tilde=None if obj.get("c_tilde") is None else float(obj["c_tilde"]),
        )


@dataclass(frozen=True)
class NonlocalGame:
    name: str
    parties: int
    inputs_per_party: int
    input_distribution: Mapping[tuple[int, ...], float]
    win_table: Mapping[tuple[int, ...], frozenset]
    bell_slope: float
    bell_intercept: float

    def __post_init__(self):
        total = sum(self.input_distribution.values())
        if abs(total - 1.0) > TOL:
            raise ValueError(f"input distribution sums to {total}, not 1")
        full_grid = set(itertools.product(range(self.inputs_per_party), repeat=self.parties))
        if set(self.win_table) != full_grid:
            raise ValueError("win predicate must classify every input tuple")
        for inputs in self.input_distribution:
            if inputs not in full_grid:
                raise ValueError(f"input tuple {inputs} outside the game's grid")

    def wins(self, inputs: tuple[int, ...], outputs: tuple[int, ...]) -> bool:
        self._check_labels(inputs, outputs)
        return outputs in self.win_table[inputs]

    def _check_labels(self, inputs: Sequence[int], outputs: Sequence[int]) -> None:
        if len(inputs) != self.parties or len(outputs) != self.parties:
            raise ValueError(f"expected {self.parties}-party tuples")
        if any(not 0 <= i < self.inputs_per_party for i in inputs):
            raise ValueError(f"input labels {tuple(inputs)} out of range")
        if any(o not in (0, 1) for o in outputs):
            raise ValueError(f"output labels {tuple(outputs)} out of range")

    def input_tuples(self) -> list[tuple[int, ...]]:
        """Support of the input distribution, in deterministic order."""
        return sorted(self.input_distribution)

    def output_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product((0, 1), repeat=self.parties))

    def to_json(self) -> dict:
        key = lambda t: ",".join(map(str, t))
        return {
            "name": self.name,
            "parties": self.parties,
            "inputs_per_party": self.inputs_per_party,
            "distribution": {key(i): p for i, p in sorted(self.input_distribution.items())},
            "predicate": {
                key(i): sorted(key(o) for o in wins) for i, wins in sorted(self.win_table.items())
            },
            "bell_slope": self.bell_slope,
            "bell_intercept": self.bell_intercept,
        }

    @staticmethod
    def from_json(obj: dict) -> "NonlocalGame":
        unkey = lambda s: tuple(int(x) for x in s.split(","))
        return NonlocalGame(
            name=obj["name"],
            parties=int(obj["parties"]),
            inputs_per_party=int(obj["inputs_per_party"]),
            input_distribution={unkey(k): float(v) for k, v in obj["distribution"].items()},
            win_table={unkey(k): frozenset(unkey(o) for o in v) for k, v in obj["predicate"].items()},
            bell_slope=float(obj["bell_slope"]),
            bell_intercept=float(obj["bell_intercept"]),
        )


@dataclass(frozen=True)
class QuantumStrategy:
    """Shared state plus, per party and input, a (outcome-0, outcome-1) effect pair."""

    shared_state: DensityOperator
    effects: tuple[tuple[tuple[np.ndarray, np.ndarray], ...], ...]

    def __post_init__(self):
        dims = self.shared_state.dims
        if len(self.effects) != len(dims):
            raise ValueError("one effect table per party is required")
        for party, table in enumerate(self.effects):
            d = dims[party]
            for pair in table:
                e0, e1 = (np.asarray(m, dtype=complex) for m in pair)
                BinaryMeasurement(e0, (d,))
                BinaryMeasurement(e1, (d,))
                if np.max(np.abs(e0 + e1 - np.eye(d))) > TOL:
                    raise ValueError(f"party {party}: effect pair does not sum to identity")

    @property
    def parties(self) -> int:
        return len(self.effects)

    def joint_effect(self, inputs: Sequence[int], outputs: Sequence[int]) -> np.ndarray:
        mats = [self.effects[p][inputs[p]][outputs[p]] for p in range(self.parties)]
        return tensor_all(mats)


@dataclass(frozen=True)
class RoundRecord:
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    win: bool


def _parity_games_table(parties: int, target) -> dict:
    """Win table for predicates of the form xor(outputs) == target(inputs)."""
    table = {}
    for inputs in itertools.product((0, 1), repeat=parties):
        t = target(inputs)
        winning = frozenset(
            o for o in itertools.product((0, 1), repeat=parties)
            if (sum(o) % 2) == t
        )
        table[inputs] = winning
    return table


def standard_game(name: str, *, c: float | None = None) -> tuple[NonlocalGame, RobustnessModel]:
    """Build a named game and its robustness model.

    For ``mermin3`` the success-side constant defaults to 2 - sqrt(2); the
    variant (2 - sqrt(2))/4 is also meaningful (both slopes appear in the
    self-testing literature for the GHZ game) and can be selected by passing
    ``c=MERMIN_C_ALT``. For ``chsh`` there is no default and planners require
    an explicit value.
    """
    name = name.lower()
    if name == "mermin3":
        support = [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
        game = NonlocalGame(
            name="mermin3",
            parties=3,
            inputs_per_party=2,
            input_distribution={t: 0.25 for t in support},
            win_table=_parity_games_table(3, lambda i: int(any(i))),
            bell_slope=8.0,
            bell_intercept=-4.0,
        )
        c_val = MERMIN_C_DEFAULT if c is None else c
        model = RobustnessModel(
            p_qm=1.0, p_l=0.75, b_q=4.0, b_l=2.0, algebraic=True,
            c=c_val, c_tilde=1.0 / (4.0 * c_val),
        )
        return game, model
    if name == "chsh":
        support = [(0, 0), (0, 1), (1, 0), (1, 1)]
        game = NonlocalGame(
            name="chsh",
            parties=2,
            inputs_per_party=2,
            input_distribution={t: 0.25 for t in support},
            win_table=_parity_games_table(2, lambda i: i[0] & i[1]),
            bell_slope=8.0,
            bell_intercept=-4.0,
        )
        b_q = 2.0 * math.sqrt(2.0)
        model = RobustnessModel(
            p_qm=CHSH_P_QM, p_l=0.75, b_q=b_q, b_l=2.0, algebraic=False,
            c=c, c_tilde=None if c is None else 1.0 / (b_q * c),
        )
        return game, model
    raise ValueError(f"unknown game {name!r}")


def _dichotomic_pair(observable: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Effects for outputs (0, 1) of a +/-1-valued observable; 0 maps to +1."""
    d = observable.shape[0]
    eye = np.eye(d, dtype=complex)
    return (eye + observable) / 2.0, (eye - observable) / 2.0


def optimal_strategy(game: NonlocalGame) -> QuantumStrategy:
    """Quantum strategy reaching the game's quantum bound."""
    if game.name == "mermin3":
        table = (_dichotomic_pair(PAULI_X), _dichotomic_pair(PAULI_Y))
        return QuantumStrategy(ghz_state(3).density(), (table, table, table))
    if game.name == "chsh":
        s = 1.0 / math.sqrt(2.0)
        alice = (_dichotomic_pair(PAULI_Z), _dichotomic_pair(PAULI_X))
        bob = (
            _dichotomic_pair(s * (PAULI_Z + PAULI_X)),
            _dichotomic_pair(s * (PAULI_Z - PAULI_X)),
        )
        return QuantumStrategy(bell_state().density(), (alice, bob))
    raise ValueError(f"no optimal strategy known for game {game.name!r}")


def output_distribution(strategy: QuantumStrategy, inputs: Sequence[int]) -> np.ndarray:
    """Born probabilities over output tuples (lexicographic order) for fixed inputs."""
    rho = strategy.shared_state.matrix
    n = strategy.parties
    probs = np.empty(2 ** n)
    for k, outputs in enumerate(itertools.product((0, 1), repeat=n)):
        eff = strategy.joint_effect(inputs, outputs)
        probs[k] = float(np.real(np.trace(eff @ rho)))
    probs = np.clip(probs, 0.0, None)
    s = float(probs.sum())
    if abs(s - 1.0) > 1e-7:
        raise ValueError(f"output probabilities sum to {s}")
    return probs / s


def win_probability(game: NonlocalGame, strategy: QuantumStrategy) -> float:
    """Exact probability of winning a round, averaged over the input distribution."""
    if strategy.parties != game.parties:
        raise ValueError("strategy and game have different party counts")
    outs = game.output_tuples()
    total = 0.0
    for inputs, q in game.input_distribution.items():
        if q == 0.0:
            continue
        dist = output_distribution(strategy, inputs)
        wins = game.win_table[inputs]
        total += q * sum(dist[k] for k, o in enumerate(outs) if o in wins)
    return float(min(max(total, 0.0), 1.0))


def bell_value(game: NonlocalGame, strategy: QuantumStrategy) -> float:
    """Value of the game's correlator functional via the recorded affine map."""
    return game.bell_slope * win_probability(game, strategy) + game.bell_intercept


def bell_value_from_win(game: NonlocalGame, win: float) -> float:
    return game.bell_slope * win + game.bell_intercept


def win_from_bell_value(game: NonlocalGame, value: float) -> float:
    return (value - game.bell_intercept) / game.bell_slope


def score_round(game: NonlocalGame, inputs: Sequence[int], outputs: Sequence[int]) -> int:
    """1 if the round is won, else 0."""
    return int(game.wins(tuple(inputs), tuple(outputs)))


def sample_round(strategy: QuantumStrategy, game: NonlocalGame, rng: np.random.Generator) -> RoundRecord:
    """Draw one round: inputs from the game, outputs from the Born rule."""
    inputs_list = game.input_tuples()
    q = np.array([game.input_distribution[t] for t in inputs_list])
    i_idx = int(rng.choice(len(inputs_list), p=q))
    inputs = inputs_list[i_idx]
    dist = output_distribution(strategy, inputs)
    o_idx = int(rng.choice(dist.size, p=dist))
    outputs = game.output_tuples()[o_idx]
    return RoundRecord(inputs, outputs, game.wins(inputs, outputs))


def game_bundle_json(game: NonlocalGame, model: RobustnessModel) -> dict:
    """Game definition together with its robustness constants, one JSON object."""
    obj = game.to_json()
    obj["robustness"] = model.to_json()
    return obj


def game_bundle_from_json(obj: dict) -> tuple[NonlocalGame, RobustnessModel]:
    return NonlocalGame.from_json(obj), RobustnessModel.from_json(obj["robustness"])


def deterministic_strategies(game: NonlocalGame) -> Iterator[tuple]:
    """All deterministic local strategies as per-party input->output maps."""
    per_party = list(itertools.product((0, 1), repeat=game.inputs_per_party))
    yield from itertools.product(per_party, repeat=game.parties)


def deterministic_win_probability(game: NonlocalGame, assignment: Sequence[Sequence[int]]) -> float:
    total = 0.0
    for inputs, q in game.input_distribution.items():
        outputs = tuple(assignment[p][inputs[p]] for p in range(game.parties))
        if outputs in game.win_table[inputs]:
            total += q
    return total


def classical_optimum(game: NonlocalGame) -> tuple[float, float]:
    """(max win probability, max functional value) over deterministic local strategies."""
    best = max(deterministic_win_probability(game, a) for a in deterministic_strategies(game))
    return best, bell_value_from_win(game, best)
