import numpy as np
import pytest

from copula import Panel, Signature


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def comonotone_panel():
    """160 tie-free observations of (x, x): fills the 16 diagonal cells of a 16 x 16 grid evenly."""
    x = np.arange(1, 161, dtype=float)
    return Panel(np.column_stack([x, x]), series_id='comonotone')


@pytest.fixture
def countermonotone_panel():
    x = np.arange(1, 161, dtype=float)
    return Panel(np.column_stack([x, -x]), series_id='countermonotone')


@pytest.fixture
def random_signature():
    """Factory of normalized signatures with `n_atoms` distinct random cells on an m^d grid."""

    def make(rng, n_atoms, resolution=8, dimension=2):
        flat = rng.choice(resolution ** dimension, size=n_atoms, replace=False)
        cells = np.stack(np.unravel_index(flat, (resolution,) * dimension), axis=1)
        weights = rng.random(n_atoms) + 0.05
        return Signature(cells, weights / weights.sum(), resolution)

    return make
