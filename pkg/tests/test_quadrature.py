import numpy as np
import pytest

from rieszsim.quadrature import CompositeQuadrature, default_beam_quadrature


def test_polynomial_exactness():
    quad = CompositeQuadrature(panels=3, order=5)
    for p in range(2 * 5):
        val = quad.integrate(quad.nodes**p)
        assert val == pytest.approx(1.0 / (p + 1), rel=1e-14)


def test_sine_orthogonality():
    quad = default_beam_quadrature(64)
    x = quad.nodes
    val = quad.integrate(np.sin(63 * np.pi * x) * np.sin(64 * np.pi * x))
    assert abs(val) < 1e-13
    val = quad.integrate(np.sin(64 * np.pi * x) ** 2)
    assert val == pytest.approx(0.5, rel=1e-13)


def test_convergence_rate_on_oscillatory_integrand():
    # fixed low order: error should drop like h^(2*order) when panels double
    exact = (1.0 - np.cos(40.0)) / 40.0
    errs = []
    for panels in (20, 40):
        quad = CompositeQuadrature(panels=panels, order=2)
        errs.append(abs(quad.integrate(np.sin(40.0 * quad.nodes)) - exact))
    ratio = errs[0] / errs[1]
    assert 8.0 < ratio < 40.0  # nominal 2^4 = 16


def test_interval_mapping():
    quad = CompositeQuadrature(panels=4, order=6, a=-1.0, b=3.0)
    assert quad.integrate(np.ones_like(quad.nodes)) == pytest.approx(4.0, rel=1e-14)
    assert quad.nodes.min() > -1.0 and quad.nodes.max() < 3.0


def test_validation():
    with pytest.raises(ValueError):
        CompositeQuadrature(panels=0)
    with pytest.raises(ValueError):
        CompositeQuadrature(a=1.0, b=0.0)
    quad = CompositeQuadrature(panels=2, order=3)
    with pytest.raises(ValueError, match="sample count"):
        quad.integrate(np.ones(5))
