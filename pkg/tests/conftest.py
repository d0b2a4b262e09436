import numpy as np
import pytest

from diqsv.games import optimal_strategy, standard_game


@pytest.fixture(scope="session")
def mermin():
    game, model = standard_game("mermin3")
    return game, model, optimal_strategy(game)


@pytest.fixture(scope="session")
def chsh():
    game, model = standard_game("chsh")
    return game, model, optimal_strategy(game)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random full-rank density matrix via a Ginibre draw."""
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return m / np.trace(m).real
