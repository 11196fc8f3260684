import pytest

from olbench import SyntheticSpec, generate_synthetic


@pytest.fixture(scope="session")
def separable_data():
    """182-sample dataset the planted rule separates with margin 1."""
    return generate_synthetic(SyntheticSpec(n_pos=148, n_neg=34, flip_rate=0.0, seed=7))


@pytest.fixture(scope="session")
def noisy_data():
    """Same shape with 10% label flips."""
    return generate_synthetic(SyntheticSpec(n_pos=148, n_neg=34, flip_rate=0.1, seed=11))
