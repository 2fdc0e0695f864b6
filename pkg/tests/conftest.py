"""Shared fixtures: deterministic toy dataset and a trained toy checkpoint."""
import numpy as np
import pytest

from ipcamo import random_tree
from ipcamo.vae import Hyperparams, train


def make_toy_dataset(seed: int = 42):
    """50 training trees (<= 20 nodes) and 22 small test trees."""
    rng = np.random.default_rng(seed)
    train_set = [random_tree(rng, 1 + int(rng.integers(9)), n_pi_pool=6)
                 for _ in range(50)]
    test_set = [random_tree(rng, 1 + int(rng.integers(4)), n_pi_pool=6)
                for _ in range(22)]
    return train_set, test_set


TOY_HP = Hyperparams(latent_dim=24, hidden_dim=24, mlp_hidden=24, max_pi=12,
                     seed=0, epochs=15, lr=3e-3)


@pytest.fixture(scope="session")
def toy_data():
    return make_toy_dataset()


@pytest.fixture(scope="session")
def toy_checkpoint(toy_data):
    """Train once per session; everything downstream shares the result."""
    train_set, _ = toy_data
    params, history = train(train_set, TOY_HP)
    return params, history
