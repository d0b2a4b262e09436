"""Source models: IID, independent, correlated-mixture, and abstract Bernoulli.

A source emits one copy per round. Supported families:

- ``iid``: the same state every round.
- ``independent``: a fixed list of per-round states, mutually independent.
- ``mixture``: a convex mixture of product sequences ("the source flips a
  coin, then commits to a branch"). The state seen in round j, conditioned
  on the measurement records of rounds 1..j-1, is the posterior-weighted
  mixture of the branch states. Updating the weights with Bayes' rule
  (w_b proportional to w_b * Pr[record | branch b]) reproduces exactly the
  conditional state obtained by projecting and partial-tracing the full
  sequence state, without ever materializing it.
- ``bernoulli``: no quantum state at all, just a per-round success
  probability. This exercises the statistics of the protocol layer
  independently of the quantum layer; rounds carry empty input/output
  tuples.

``SourceState`` is an explicit value (round index, posterior weights,
optional history) threaded through calls, so concurrent simulations never
share mutable state. Branches with posterior weight below 1e-300 are pruned
to avoid division underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .games import NonlocalGame, QuantumStrategy, RoundRecord, output_distribution, win_probability
from .linalg import DensityOperator, StateVector, depolarize, ghz_state, maximally_mixed, standard_state

_WEIGHT_FLOOR = 1e-300

KINDS = ("iid", "independent", "mixture", "bernoulli")


@dataclass(frozen=True)
class SourceModel:
    """Validated description of what the source emits over ``copies`` rounds.

    ``branches`` holds, per branch, the per-round states; a length-1 branch
    repeats its state every round. Non-mixture quantum kinds are stored as a
    single branch with weight 1.
    """

    kind: str
    copies: int
    weights: tuple[float, ...] = (1.0,)
    branches: tuple[tuple[DensityOperator, ...], ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.copies < 1:
            raise ValueError("source must produce at least one copy")
        if abs(sum(self.weights) - 1.0) > 1e-9 or any(w < 0 for w in self.weights):
            raise ValueError("branch weights must form a probability distribution")
        if self.kind == "bernoulli":
            if not self.probs:
                raise ValueError("bernoulli source needs success probabilities")
            if len(self.probs) not in (1, self.copies):
                raise ValueError("bernoulli probability list must have length 1 or copies")
            if any(not 0.0 <= p <= 1.0 for p in self.probs):
                raise ValueError("bernoulli probabilities must lie in [0, 1]")
        else:
            if len(self.branches) != len(self.weights):
                raise ValueError("one weight per branch is required")
            if not self.branches:
                raise ValueError("quantum source needs at least one branch")
            dim = self.branches[0][0].dim
            for branch in self.branches:
                if len(branch) not in (1, self.copies):
                    raise ValueError("branch state list must have length 1 or copies")
                if any(s.dim != dim for s in branch):
                    raise ValueError("all branch states must share one dimension")

    @property
    def n_branches(self) -> int:
        return 1 if self.kind == "bernoulli" else len(self.branches)

    def branch_state(self, branch: int, round_index: int) -> DensityOperator:
        states = self.branches[branch]
        return states[0] if len(states) == 1 else states[round_index]

    def round_prob(self, round_index: int) -> float:
        return self.probs[0] if len(self.probs) == 1 else self.probs[round_index]


@dataclass(frozen=True)
class SourceState:
    """Verifier's view of the source after some rounds: posterior + history."""

    round_index: int
    posterior: tuple[float, ...]
    history: tuple[RoundRecord, ...] = ()

    def __post_init__(self):
        if abs(sum(self.posterior) - 1.0) > 1e-9 or any(w < 0 for w in self.posterior):
            raise ValueError("posterior weights must form a probability distribution")


def iid_source(state: DensityOperator | StateVector, copies: int) -> SourceModel:
    if isinstance(state, StateVector):
        state = state.density()
    return SourceModel(kind="iid", copies=copies, weights=(1.0,), branches=((state,),))

def independent_source(states: Sequence[DensityOperator]) -> SourceModel:
    return SourceModel(kind="independent", copies=len(states), weights=(1.0,), branches=(tuple(states),))


def mixture_source(weights: Sequence[float], branches: Sequence, copies: int) -> SourceModel:
    norm_branches = []
    for branch in branches:
        if isinstance(branch, (DensityOperator, StateVector)):
            branch = [branch]
        norm_branches.append(tuple(s.density() if isinstance(s, StateVector) else s for s in branch))
    return SourceModel(kind="mixture", copies=copies, weights=tuple(float(w) for w in weights), branches=tuple(norm_branches))


def bernoulli_source(probs: Sequence[float] | float, copies: int | None = None) -> SourceModel:
    if isinstance(probs, (int, float)):
        if copies is None:
            raise ValueError("constant bernoulli source needs an explicit copy count")
        probs = (float(probs),)
    else:
        probs = tuple(float(p) for p in probs)
        copies = len(probs) if copies is None else copies
    return SourceModel(kind="bernoulli", copies=int(copies), probs=tuple(probs))


def initial_state(model: SourceModel) -> SourceState:
    prior = (1.0,) if model.kind == "bernoulli" else model.weights
    return SourceState(round_index=0, posterior=prior)


class RoundProfile:
    """Per-branch Born statistics precomputed once per (model, strategy, game).

    ``win[b][j]`` is branch b's win probability in round j and
    ``out[b][j]`` maps input index -> output distribution; constant branches
    store a single entry.
    """

    def __init__(self, model: SourceModel, strategy: QuantumStrategy | None, game: NonlocalGame | None):
        self.model = model
        if model.kind == "bernoulli":
            self.inputs = []
            self.input_probs = np.empty(0)
            self.outputs = []
            self.win = None
            self.out = None
            return
        if strategy is None or game is None:
            raise ValueError("quantum sources need a strategy and a game")
        self.inputs = game.input_tuples()
        self.input_probs = np.array([game.input_distribution[t] for t in self.inputs])
        self.outputs = game.output_tuples()
        self.win = []
        self.out = []
        for b, branch in enumerate(model.branches):
            rounds = range(len(branch))
            win_b, out_b = [], []
            for j in rounds:
                strat = QuantumStrategy(branch[j], strategy.effects)
                win_b.append(win_probability(game, strat))
                out_b.append(np.stack([output_distribution(strat, i) for i in self.inputs]))
            self.win.append(win_b)
            self.out.append(out_b)
        self.win_mask = []  # per input: boolean over output tuples
        for i, inputs in enumerate(self.inputs):
            wins = game.win_table[inputs]
            self.win_mask.append(np.array([o in wins for o in self.outputs]))

    def branch_win(self, b: int, j: int) -> float:
        entries = self.win[b]
        return entries[0] if len(entries) == 1 else entries[j]

    def branch_out(self, b: int, j: int) -> np.ndarray:
        entries = self.out[b]
        return entries[0] if len(entries) == 1 else entries[j]


def build_profile(model: SourceModel, strategy: QuantumStrategy | None = None, game: NonlocalGame | None = None) -> RoundProfile:
    return RoundProfile(model, strategy, game)


def conditional_win_probability(
    model: SourceModel,
    state: SourceState,
    strategy: QuantumStrategy | None = None,
    game: NonlocalGame | None = None,
    profile: RoundProfile | None = None,
) -> float:
    """Win probability of the round-j conditional state given the history in ``state``."""
    j = state.round_index
    if j >= model.copies:
        raise ValueError("source exhausted: no copies left")
    if model.kind == "bernoulli":
        return model.round_prob(j)
    profile = profile or build_profile(model, strategy, game)
    return float(sum(w * profile.branch_win(b, j) for b, w in enumerate(state.posterior)))


def posterior_update(
    model: SourceModel,
    state: SourceState,
    record: RoundRecord,
    strategy: QuantumStrategy | None = None,
    game: NonlocalGame | None = None,
    profile: RoundProfile | None = None,
    keep_history: bool = True,
) -> SourceState:
    """Bayes update of the branch posterior with one observed round."""
    j = state.round_index
    history = state.history + (record,) if keep_history else state.history
    if model.kind == "bernoulli":
        return SourceState(j + 1, state.posterior, history)
    if profile is None and (strategy is None or game is None) and model.n_branches == 1:
        return SourceState(j + 1, state.posterior, history)
    profile = profile or build_profile(model, strategy, game)
    i_idx = profile.inputs.index(record.inputs)
    o_idx = profile.outputs.index(record.outputs)
    lik = np.array([profile.branch_out(b, j)[i_idx][o_idx] for b in range(model.n_branches)])
    post = np.asarray(state.posterior) * lik
    total = float(post.sum())
    if total < _WEIGHT_FLOOR:
        raise ValueError("observed record is impossible under every branch")
    post = post / total
    post[post < _WEIGHT_FLOOR] = 0.0
    post = post / post.sum()
    return SourceState(j + 1, tuple(float(w) for w in post), history)


def conditional_round(
    model: SourceModel,
    state: SourceState,
    strategy: QuantumStrategy | None,
    game: NonlocalGame | None,
    rng: np.random.Generator,
    profile: RoundProfile | None = None,
    keep_history: bool = True,
) -> tuple[float, RoundRecord, SourceState]:
    """Play one round against the conditional state and update the posterior.

    Returns (conditional win probability before the round, the sampled
    record, the next source state). Deterministic given the generator state.
    """
    j = state.round_index
    if j >= model.copies:
        raise ValueError("source exhausted: no copies left")
    if model.kind == "bernoulli":
        p = model.round_prob(j)
        win = bool(rng.random() < p)
        record = RoundRecord((), (), win)
        history = state.history + (record,) if keep_history else state.history
        return p, record, SourceState(j + 1, state.posterior, history)
    profile = profile or build_profile(model, strategy, game)
    p_cond = conditional_win_probability(model, state, strategy, game, profile)
    w = np.asarray(state.posterior)
    i_idx = int(np.searchsorted(np.cumsum(profile.input_probs), rng.random(), side="right"))
    i_idx = min(i_idx, len(profile.inputs) - 1)
    mix_out = sum(w[b] * profile.branch_out(b, j)[i_idx] for b in range(model.n_branches))
    o_idx = int(np.searchsorted(np.cumsum(mix_out), rng.random(), side="right"))
    o_idx = min(o_idx, len(profile.outputs) - 1)
    inputs = profile.inputs[i_idx]
    outputs = profile.outputs[o_idx]
    record = RoundRecord(inputs, outputs, bool(profile.win_mask[i_idx][o_idx]))
    next_state = posterior_update(model, state, record, strategy, game, profile, keep_history)
    return p_cond, record, next_state


def branch_average_success(
    model: SourceModel,
    *,
    branch: int | None = None,
    history: Sequence[RoundRecord] | None = None,
    strategy: QuantumStrategy | None = None,
    game: NonlocalGame | None = None,
) -> float:
    """Mean of the per-round conditional success probabilities.

    With ``branch`` the mean is over that branch's rounds (no conditioning);
    with ``history`` the Bayes chain is replayed along the realized records.
    """
    if (branch is None) == (history is None):
        raise ValueError("pass exactly one of branch or history")
    if branch is not None:
        if model.kind == "bernoulli":
            if branch != 0:
                raise ValueError("bernoulli sources have a single branch")
            return float(np.mean([model.round_prob(j) for j in range(model.copies)]))
        if not 0 <= branch < model.n_branches:
            raise ValueError(f"branch index {branch} out of range")
        profile = build_profile(model, strategy, game)
        return float(np.mean([profile.branch_win(branch, j) for j in range(model.copies)]))
    profile = None if model.kind == "bernoulli" else build_profile(model, strategy, game)
    state = initial_state(model)
    conds = []
    for record in history:
        conds.append(conditional_win_probability(model, state, strategy, game, profile))
        state = posterior_update(model, state, record, strategy, game, profile, keep_history=False)
    return float(np.mean(conds))


def source_from_spec(spec: dict, default_copies: int | None = None) -> SourceModel:
    """Build a model from its JSON description.

    Schema: {"kind": ..., "n": int, then per kind: "state" (iid),
    "states" (independent), "weights" + "branches" (mixture),
    "probs" (bernoulli)}. States are {"name": ..., params} with optional
    "depolarize", or raw {"dims", "re", "im"} payloads.
    """
    kind = spec.get("kind")
    n = spec.get("n", default_copies)
    if kind == "iid":
        if n is None:
            raise ValueError("iid source spec needs a copy count")
        return iid_source(_state_from_spec(spec["state"]), int(n))
    if kind == "independent":
        return independent_source([_state_from_spec(s) for s in spec["states"]])
    if kind == "mixture":
        if n is None:
            raise ValueError("mixture source spec needs a copy count")
        branches = []
        for branch in spec["branches"]:
            if isinstance(branch, dict):
                branch = [branch]
            branches.append([_state_from_spec(s) for s in branch])
        return mixture_source([float(w) for w in spec["weights"]], branches, int(n))
    if kind == "bernoulli":
        probs = spec["probs"]
        if isinstance(probs, (int, float)):
            if n is None:
                raise ValueError("constant bernoulli spec needs a copy count")
            return bernoulli_source(float(probs), int(n))
        return bernoulli_source([float(p) for p in probs], None if n is None else int(n))
    raise ValueError(f"unknown source kind {kind!r}")


def source_from_string(text: str, copies: int) -> SourceModel:
    """Compact source grammar for the command line.

    ``iid-ghz-depolarized:LAM`` | ``iid-bernoulli:P`` | ``coinflip-ghz:W``
    (W = weight of the GHZ branch, remainder is the maximally mixed state).
    """
    name, _, arg = text.partition(":")
    name = name.lower()
    if name == "iid-ghz-depolarized":
        lam = float(arg) if arg else 0.0
        return iid_source(depolarize(ghz_state(3), lam), copies)
    if name == "iid-bernoulli":
        if not arg:
            raise ValueError("iid-bernoulli needs a success probability")
        return bernoulli_source(float(arg), copies)
    if name == "coinflip-ghz":
        w = float(arg) if arg else 0.5
        mixed = maximally_mixed(8)
        mixed = DensityOperator(mixed.matrix, (2, 2, 2))
        return mixture_source([w, 1.0 - w], [ghz_state(3), mixed], copies)
    raise ValueError(f"unknown source shorthand {text!r}")


def _as_qubit_register(state: DensityOperator) -> DensityOperator:
    """Refactor a single power-of-two subsystem into qubits for party bookkeeping."""
    d = state.dim
    if len(state.dims) == 1 and d >= 4 and d & (d - 1) == 0:
        return DensityOperator(state.matrix, (2,) * (d.bit_length() - 1))
    return state


def _state_from_spec(spec: dict) -> DensityOperator:
    if "name" in spec:
        params = {k: v for k, v in spec.items() if k not in ("name", "depolarize")}
        state = standard_state(spec["name"], **params)
        lam = spec.get("depolarize")
        if lam is not None:
            if not isinstance(state, StateVector):
                raise ValueError("depolarize applies to pure named states only")
            return depolarize(state, float(lam))
        return state.density() if isinstance(state, StateVector) else _as_qubit_register(state)
    if "re" in spec:
        dims = tuple(spec["dims"])
        d = int(np.prod(dims))
        if len(spec["re"]) == d:
            return StateVector.from_json(spec).density()
        return DensityOperator.from_json(spec)
    raise ValueError("state spec needs either a name or raw dims/re/im data")
