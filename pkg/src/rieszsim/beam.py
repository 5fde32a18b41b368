"""Built-in damped Euler-Bernoulli beam with point-torque boundary disturbances.

The beam on (0,1) with clamped ends, curvature disturbances d1, d2 at the two
ends and distributed forcing u lives in H = (H^2 cap H0^1) x L^2 with

    <(x1,x2),(y1,y2)> = int x1'' conj(y1'') + x2 conj(y2) dx.

For damping alpha > 0, alpha != 1, the disturbance-free operator is
Riesz-spectral with simple eigenvalues (branch pairs eps = +-1)

    lambda_{n,eps} = -n^2 pi^2 (alpha + eps w),   w = sqrt(alpha^2 - 1),

where w is imaginary for alpha < 1.  Eigenvectors are multiples of
(sin(n pi x), lambda sin(n pi x)); the scale is fixed to unit norm in H,
which for alpha > 1 equals 1/(n^2 pi^2 sqrt(alpha(alpha + eps w))) and for
alpha < 1 equals 1/(n^2 pi^2).  With this choice the per-frequency Gram
blocks have eigenvalues exactly {1 - 1/alpha, 1 + 1/alpha} (alpha > 1) and
{1 - alpha, 1 + alpha} (alpha < 1), matching the frame bounds.

The lifting operator maps (d1, d2) to the cubic with curvature
(1-x) d1 + x d2 and zero velocity component, so A B = 0 identically.
"""

import math
from functools import lru_cache

import numpy as np

from .quadrature import CompositeQuadrature, default_beam_quadrature
from .spectral import RieszBounds, Spectrum
from .system import GramData, ModalProjection, SystemDefinition

PI2 = math.pi**2


def branch_root(alpha: float) -> complex:
    """w = sqrt(alpha^2 - 1), imaginary for alpha in (0, 1)."""
    return complex(np.sqrt(complex(alpha * alpha - 1.0)))


def branch_pair(alpha: float) -> tuple[complex, complex]:
    """The two branch roots p = alpha +- sqrt(alpha^2 - 1).

    Their product is exactly 1, so the slow root comes from the reciprocal,
    which avoids the cancellation in alpha - sqrt(alpha^2 - 1) at large
    damping.
    """
    p_plus = alpha + branch_root(alpha)
    return p_plus, 1.0 / p_plus


def _validate_alpha(alpha: float) -> None:
    if alpha <= 0.0:
        raise ValueError("damping parameter alpha must be positive")
    if alpha == 1.0:
        raise ValueError(
            "alpha = 1 is excluded: the eigenvector family is no longer a Riesz basis"
        )


def mode_table(alpha: float, n_modes: int):
    """Per-mode arrays for modes ordered (1,+1), (1,-1), (2,+1), ...

    Returns (n, eps, lam, phi_scale, psi_scale) where phi_scale multiplies
    (sin, lambda sin) and psi_scale multiplies (sin, -conj(lambda) sin), the
    two families being biorthonormal.
    """
    _validate_alpha(alpha)
    if n_modes < 1:
        raise ValueError("need at least one frequency index")
    n = np.repeat(np.arange(1, n_modes + 1), 2)
    eps = np.tile([1.0, -1.0], n_modes)
    p = np.where(eps > 0, *branch_pair(alpha))
    n2pi2 = n.astype(float) ** 2 * PI2
    lam = -n2pi2 * p
    if alpha > 1.0:
        phi_scale = (1.0 / (n2pi2 * np.sqrt(alpha * p.real))).astype(complex)
    else:
        phi_scale = (1.0 / n2pi2).astype(complex)
    # biorthonormalization <phi_{n,eps}, psi_{n,eps}> = 1 fixes the psi scale
    psi_scale = np.conj(2.0 / (phi_scale * n2pi2**2 * (1.0 - p * p)))
    return n, eps, lam, phi_scale, psi_scale


def beam_spectrum(alpha: float, n_modes: int) -> Spectrum:
    _, _, lam, _, _ = mode_table(alpha, n_modes)
    # the omitted modes all have Re lambda <= this (slowest branch at n+1)
    slow = branch_pair(alpha)[1].real if alpha > 1.0 else alpha
    tail = -((n_modes + 1) ** 2) * PI2 * slow
    return Spectrum(lam, declared_tail_bound=tail)


class BeamBasis:
    """Explicit eigenfunctions in energy representation (x1'', x2).

    Everything is a multiple of sin(n pi x), so samples vectorise over modes:
    `phi_values` / `psi_values` return (2N, npts) arrays of the curvature and
    velocity components on given abscissae.
    """

    def __init__(self, alpha: float, n_modes: int, quadrature: CompositeQuadrature | None = None):
        self.alpha = alpha
        self.n_modes = n_modes
        self.quadrature = quadrature or default_beam_quadrature(n_modes)
        self.n, self.eps, self.lam, self.phi_scale, self.psi_scale = mode_table(alpha, n_modes)

    def _sin(self, x: np.ndarray) -> np.ndarray:
        return np.sin(np.pi * np.outer(self.n, x))

    def phi_values(self, x):
        x = np.asarray(x, dtype=float)
        sin = self._sin(x)
        n2pi2 = (self.n.astype(float) ** 2 * PI2)[:, None]
        d2 = -n2pi2 * self.phi_scale[:, None] * sin
        v = self.lam[:, None] * self.phi_scale[:, None] * sin
        return d2, v

    def psi_values(self, x):
        x = np.asarray(x, dtype=float)
        sin = self._sin(x)
        n2pi2 = (self.n.astype(float) ** 2 * PI2)[:, None]
        d2 = -n2pi2 * self.psi_scale[:, None] * sin
        v = -np.conj(self.lam)[:, None] * self.psi_scale[:, None] * sin
        return d2, v

    @staticmethod
    def lifting_values(x):
        """Curvature components of B e_1, B e_2 (velocity components vanish)."""
        x = np.asarray(x, dtype=float)
        return np.vstack([1.0 - x, x])

    def phi_psi_gram(self, n_modes: int | None = None) -> np.ndarray:
        """Quadrature matrix <phi_i, psi_j>; identity up to quadrature error."""
        quad = self.quadrature
        k = 2 * self.n_modes if n_modes is None else n_modes
        pd2, pv = self.phi_values(quad.nodes)
        qd2, qv = self.psi_values(quad.nodes)
        pd2, pv = pd2[:k], pv[:k]
        qd2, qv = qd2[:k], qv[:k]
        w = quad.weights
        return (pd2 * w) @ qd2.conj().T + (pv * w) @ qv.conj().T

    def lifting_psi_gram(self) -> np.ndarray:
        """Quadrature matrix <B e_k, psi_j>, the lifting projections."""
        quad = self.quadrature
        bd2 = self.lifting_values(quad.nodes)
        qd2, _ = self.psi_values(quad.nodes)
        return (bd2 * quad.weights) @ qd2.conj().T

    def lifting_gram(self) -> np.ndarray:
        quad = self.quadrature
        bd2 = self.lifting_values(quad.nodes)
        return (bd2 * quad.weights) @ bd2.conj().T


def lifting_projection_rows(alpha: float, n_modes: int) -> np.ndarray:
    """Closed-form b_{k,(n,eps)} = <B e_k, psi_{n,eps}>, shape (2, 2N).

    The curvatures of B e_1, B e_2 are (1-x) and x, whose sine coefficients
    are 1/(n pi) and (-1)^(n+1)/(n pi).
    """
    n, _, _, _, psi_scale = mode_table(alpha, n_modes)
    npi = n * math.pi
    csc = np.conj(psi_scale)
    b1 = -npi * csc
    b2 = ((-1.0) ** n) * npi * csc
    return np.vstack([b1, b2])


def beam_gram_blocks(alpha: float, n_modes: int):
    """Per-frequency 2x2 Gram blocks G[e, e'] = <phi_{n,e}, phi_{n,e'}>."""
    _, _, _, phi_scale, _ = mode_table(alpha, 1)
    p = np.array(branch_pair(alpha))
    k = phi_scale  # scales for n = 1; products below are n-independent
    n4pi4 = PI2**2
    block = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            block[i, j] = k[i] * np.conj(k[j]) * (n4pi4 / 2.0) * (1.0 + p[i] * np.conj(p[j]))
    block.setflags(write=False)
    blocks = tuple(block for _ in range(n_modes))
    groups = tuple((2 * i, 2 * i + 1) for i in range(n_modes))
    return blocks, groups


def beam_riesz_bounds(alpha: float) -> RieszBounds:
    if alpha > 1.0:
        return RieszBounds(1.0 - 1.0 / alpha, 1.0 + 1.0 / alpha)
    return RieszBounds(1.0 - alpha, 1.0 + alpha)


@lru_cache(maxsize=16)
def _cached_beam(alpha: float, n_modes: int) -> SystemDefinition:
    basis = BeamBasis(alpha, n_modes)
    b = lifting_projection_rows(alpha, n_modes)
    a = np.zeros_like(b)  # A B = 0: the lifting range is cubic in x
    projections = tuple(
        ModalProjection(channel=k, b=b[k], a=a[k]) for k in range(2)
    )
    blocks, groups = beam_gram_blocks(alpha, n_modes)
    return SystemDefinition(
        spectrum=beam_spectrum(alpha, n_modes),
        projections=projections,
        gram=GramData(blocks=blocks, groups=groups),
        riesz_bounds=beam_riesz_bounds(alpha),
        m=2,
        basis_constant=1.0,
        lifting_gram=basis.lifting_gram(),
        eigenfunctions=basis,
        label=f"beam(alpha={alpha}, N={n_modes})",
    )


def beam_system(alpha: float, n_modes: int) -> SystemDefinition:
    """The damped beam truncated to frequencies n = 1..n_modes (2N modes)."""
    _validate_alpha(alpha)
    if n_modes < 1:
        raise ValueError("need at least one frequency index")
    return _cached_beam(float(alpha), int(n_modes))


# ---------------------------------------------------------------------------
# Orthonormal basis {psi_n, psi_n^d} used by the coupled 2x2 block form.
# psi_n = (sin/(n^2 pi^2), sin), psi_n^d = (sin/(n^2 pi^2), -sin): a Hilbert
# basis of H, so |X|^2 = sum |c_n|^2 + |c_n^d|^2.


def hilbert_lifting_rows(n_modes: int) -> np.ndarray:
    """<B e_k, psi_n> = <B e_k, psi_n^d>: shape (n_modes, 2), rows per n."""
    n = np.arange(1, n_modes + 1)
    return np.stack([-1.0 / (n * math.pi), ((-1.0) ** n) / (n * math.pi)], axis=1)


def hilbert_basis_values(n_modes: int, x):
    """Energy-representation samples of [psi_1, psi_1^d, psi_2, ...] on x."""
    x = np.asarray(x, dtype=float)
    n = np.repeat(np.arange(1, n_modes + 1), 2)
    sign = np.tile([1.0, -1.0], n_modes)
    sin = np.sin(np.pi * np.outer(n, x))
    return -sin, sign[:, None] * sin


def block_basis_map(alpha: float, n_modes: int) -> np.ndarray:
    """Per-frequency change of coordinates T_n from branch-pair coefficients.

    (c_n, c_n^d) = T_n @ (c_{n,+}, c_{n,-}) with
    T_n[0, e] = <phi_{n,e}, psi_n> and T_n[1, e] = <phi_{n,e}, psi_n^d>.
    Returns shape (n_modes, 2, 2).
    """
    n, eps, _, phi_scale, _ = mode_table(alpha, n_modes)
    p = np.where(eps > 0, *branch_pair(alpha))
    n2pi2 = n.astype(float) ** 2 * PI2
    top = phi_scale * n2pi2 * (1.0 - p) / 2.0
    bot = phi_scale * n2pi2 * (1.0 + p) / 2.0
    t = np.empty((n_modes, 2, 2), dtype=complex)
    t[:, 0, 0] = top[0::2]
    t[:, 0, 1] = top[1::2]
    t[:, 1, 0] = bot[0::2]
    t[:, 1, 1] = bot[1::2]
    return t
