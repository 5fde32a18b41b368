"""Composite Gauss-Legendre quadrature on an interval.

Integrands in this package are products of low-degree polynomials and
sinusoids up to frequency ~ 2*n_max*pi, so a fixed Gauss order per panel
with a panel count scaled to the highest mode gives near machine-precision
integrals.
"""

import numpy as np
from scipy.special import roots_legendre


class CompositeQuadrature:
    """Gauss-Legendre nodes of a given order tiled over equal panels."""

    def __init__(self, panels: int = 96, order: int = 12, a: float = 0.0, b: float = 1.0):
        if panels < 1 or order < 1:
            raise ValueError("panels and order must be positive")
        if not b > a:
            raise ValueError("need b > a")
        self.panels = panels
        self.order = order
        self.a = a
        self.b = b
        ref_x, ref_w = roots_legendre(order)
        h = (b - a) / panels
        left = a + h * np.arange(panels)
        # map [-1, 1] reference nodes into each panel
        self.nodes = (left[:, None] + 0.5 * h * (ref_x[None, :] + 1.0)).ravel()
        self.weights = np.tile(0.5 * h * ref_w, panels)

    @property
    def n_points(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> complex | float | np.ndarray:
        """Integrate from sampled values; last axis must match the nodes."""
        values = np.asarray(values)
        if values.shape[-1] != self.nodes.size:
            raise ValueError("sample count does not match quadrature nodes")
        return values @ self.weights

    def integrate_fn(self, f) -> complex | float | np.ndarray:
        return self.integrate(f(self.nodes))


def default_beam_quadrature(n_max: int) -> CompositeQuadrature:
    """Panel count sized so sin(n pi x) products up to n_max stay resolved.

    Two panels per half-wave of the highest product frequency keeps the
    per-panel phase under ~2*pi for Gauss order 12, which is enough for
    biorthogonality defects below 1e-8 up to n_max = 64 and beyond.
    """
    return CompositeQuadrature(panels=max(96, 2 * n_max), order=12)
