"""Eigenvalue-sequence data and the scalar quantities derived from it.

A `Spectrum` is a finite truncation of a simple-eigenvalue sequence,
optionally with a declared bound on the real parts of the omitted modes.
From it we compute the growth bound, the parabolicity ratio
sup |lambda| / |Re lambda|, and the channel-wise damping sums that decide
whether a certificate is available when the parabolicity ratio is infinite.
"""

import math
from dataclasses import dataclass

import numpy as np


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Spectrum:
    """Finite ordered list of eigenvalues of the disturbance-free operator.

    declared_tail_bound, when present, bounds sup Re over all omitted modes;
    sup-type quantities are taken over the listed modes merged with it.
    """

    eigenvalues: np.ndarray
    declared_tail_bound: float | None = None

    def __post_init__(self):
        eig = _frozen_array(self.eigenvalues, complex).reshape(-1)
        if np.unique(eig).size != eig.size:
            raise ValueError("eigenvalues must be pairwise distinct")
        object.__setattr__(self, "eigenvalues", eig)

    def __len__(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class RieszBounds:
    """Frame constants of the eigenvector basis: m_R |c|^2 <= |sum c phi|^2 <= M_R |c|^2."""

    m_R: float
    M_R: float

    def __post_init__(self):
        if not (0.0 < self.m_R <= self.M_R):
            raise ValueError("need 0 < m_R <= M_R")

    @property
    def condition_sqrt(self) -> float:
        return math.sqrt(self.M_R / self.m_R)


@dataclass(frozen=True)
class ConstraintVerdict:
    """Outcome of the eigenvalue constraint check.

    passes is true exactly when the growth bound is negative and the
    parabolicity ratio is finite; kappa0 = -omega0 is the decay rate.
    """

    omega0: float
    kappa0: float
    zeta: float
    passes: bool


def growth_bound(spectrum: Spectrum) -> float:
    """sup Re lambda over listed modes, merged with the declared tail bound."""
    if len(spectrum) == 0:
        raise ValueError("spectrum is empty")
    omega0 = float(np.max(spectrum.eigenvalues.real))
    if spectrum.declared_tail_bound is not None:
        omega0 = max(omega0, float(spectrum.declared_tail_bound))
    return omega0


def parabolicity_ratio(spectrum: Spectrum) -> float:
    """sup |lambda| / |Re lambda|; math.inf if any listed Re lambda vanishes."""
    if len(spectrum) == 0:
        raise ValueError("spectrum is empty")
    lam = spectrum.eigenvalues
    re = np.abs(lam.real)
    if np.any(re == 0.0):
        return math.inf
    return float(np.max(np.abs(lam) / re))


def constraint_verdict(spectrum: Spectrum) -> ConstraintVerdict:
    omega0 = growth_bound(spectrum)
    zeta = parabolicity_ratio(spectrum)
    passes = omega0 < 0.0 and math.isfinite(zeta)
    return ConstraintVerdict(omega0=omega0, kappa0=-omega0, zeta=zeta, passes=passes)


@dataclass(frozen=True)
class RelaxedSums:
    """Truncated damping sums sum_n |lambda_n/Re lambda_n|^2 |b_kn|^2 per channel.

    last_decade_increment is the contribution of the trailing factor-of-ten
    of listed modes (indices >= len//10); it is reported as a convergence
    indicator rather than a convergence claim.
    """

    total: np.ndarray
    last_decade_increment: np.ndarray

    def relative_increment(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(self.total > 0.0, self.last_decade_increment / self.total, 0.0)
        return rel


def relaxed_constraint_sum(spectrum: Spectrum, lifting_projections) -> RelaxedSums:
    """Evaluate the per-channel damping sums for the given projections b_{k,n}.

    Modes with Re lambda = 0 contribute +inf unless their projection vanishes.
    """
    if len(spectrum) == 0:
        raise ValueError("spectrum is empty")
    b = np.atleast_2d(np.asarray(lifting_projections, dtype=complex))
    if b.shape[1] != len(spectrum):
        raise ValueError(
            f"lifting projections have {b.shape[1]} modes, spectrum has {len(spectrum)}"
        )
    lam = spectrum.eigenvalues
    re2 = lam.real**2
    mag2 = np.abs(lam) ** 2
    absb2 = np.abs(b) ** 2
    terms = np.empty_like(absb2)
    zero_re = re2 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero_re, np.inf, mag2 / np.where(zero_re, 1.0, re2))
    terms = np.where((absb2 == 0.0), 0.0, ratio[None, :] * absb2)
    head = len(spectrum) // 10
    total = terms.sum(axis=1)
    increment = terms[:, head:].sum(axis=1)
    return RelaxedSums(total=total, last_decade_increment=increment)
