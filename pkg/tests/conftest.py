import numpy as np
import pytest
import scipy.sparse as sp

from ajc import assemble, presets
from ajc.generator import RateMatrixSequence, TimeGrid, with_recomputed_diagonal

A, B = 0, 1  # state names of the 2-state preset


@pytest.fixture(scope="session")
def two_state_seq():
    return presets.two_state()


@pytest.fixture(scope="session")
def two_state_J(two_state_seq):
    return assemble(two_state_seq)


@pytest.fixture(scope="session")
def triple_well_seq():
    return presets.triple_well()


@pytest.fixture(scope="session")
def triple_well_J(triple_well_seq):
    return assemble(triple_well_seq)


def dense_rate_matrix(offdiag_rows):
    return with_recomputed_diagonal(sp.csr_matrix(np.array(offdiag_rows, dtype=float)))


@pytest.fixture(scope="session")
def positive_rates_seq():
    """3 states, strictly positive off-diagonal rates, 4 time cells."""
    rng = np.random.default_rng(42)
    grid = TimeGrid.uniform(0.0, 2.0, 4)
    mats = tuple(
        dense_rate_matrix(rng.uniform(0.2, 2.0, size=(3, 3))) for _ in range(4)
    )
    return RateMatrixSequence(grid, mats)
