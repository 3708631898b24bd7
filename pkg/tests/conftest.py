import numpy as np
import pytest

from pskrates.states import ProtocolParams, build_ensemble


def philox_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for test grids, independent of global state."""
    return np.random.Generator(np.random.Philox(key=seed))


def random_protocol(rng, n_states, alpha_range=(0.0, 3.0), eta_range=(0.0, 1.0)):
    alpha = rng.uniform(*alpha_range)
    eta = rng.uniform(*eta_range)
    return ProtocolParams(n_states=n_states, alpha=alpha, eta=eta)


@pytest.fixture(scope="session")
def bpsk_ref():
    """Reference two-state ensemble at alpha=1, eta=0.9."""
    return build_ensemble(ProtocolParams(n_states=2, alpha=1.0, eta=0.9))


@pytest.fixture(scope="session")
def qpsk_ref():
    """Reference four-state ensemble at alpha=1, eta=0.9."""
    return build_ensemble(ProtocolParams(n_states=4, alpha=1.0, eta=0.9))
