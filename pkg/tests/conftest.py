import numpy as np
import pytest

from rieszsim.beam import beam_system


@pytest.fixture(scope="session")
def beam_alpha2():
    return beam_system(2.0, 16)


@pytest.fixture(scope="session")
def beam_alpha_half():
    return beam_system(0.5, 16)


@pytest.fixture(scope="session")
def fine_quadrature():
    """~1e5-point composite rule used as an integration oracle."""
    from rieszsim.quadrature import CompositeQuadrature

    return CompositeQuadrature(panels=8334, order=12)


def quad_inner(quad, left_pair, right_pair):
    """State-space inner product from energy-representation samples."""
    (ld2, lv), (rd2, rv) = left_pair, right_pair
    w = quad.weights
    return np.sum(w * ld2 * np.conj(rd2)) + np.sum(w * lv * np.conj(rv))
