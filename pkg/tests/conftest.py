import numpy as np
import pytest

from vnsac.quantum import partial_trace, tfim_ground_state


@pytest.fixture(scope="session")
def tfim12():
    """12-site TFIM ground state (J=1, h=0.5); ~5 s, shared across modules."""
    return tfim_ground_state(12, 1.0, 0.5)


@pytest.fixture(scope="session")
def tfim12_half_chain(tfim12):
    return partial_trace(tfim12.state, list(range(6)))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
