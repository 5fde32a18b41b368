"""Truncated Riesz-spectral boundary control systems given by modal data.

A system is described by its eigenvalues, the projections of the lifting
operator B and of A.B onto the adjoint eigenvector sequence, Gram blocks of
the eigenvectors for exact norm evaluation, frame bounds, and the norm
constant of the chosen input-space basis.  Systems are either built in
(the damped beam, see `rieszsim.beam`) or loaded from a JSON data file.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import (
    ConstraintVerdict,
    RieszBounds,
    Spectrum,
    constraint_verdict,
    relaxed_constraint_sum,
)

#: default ceiling on the relative last-decade increment below which the
#: truncated damping sums are treated as convergent
RELAXED_CONVERGENCE_TOL = 5e-2


class UnsupportedOperationError(RuntimeError):
    """The system lacks the data needed for the requested operation."""


@dataclass(frozen=True)
class ModalProjection:
    """Per-channel projections b_n = <B e_k, psi_n> and a_n = <A B e_k, psi_n>."""

    channel: int
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        if b.shape != a.shape:
            raise ValueError("b and a must have equal length")
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class GramData:
    """Hermitian positive-definite Gram blocks G[i, j] = <phi_i, phi_j>.

    `groups` partitions the mode indices; spans of different groups are
    mutually orthogonal, so norms are exact block-diagonal quadratic forms.
    """

    blocks: tuple
    groups: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(g, dtype=complex) for g in self.blocks)
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        if len(blocks) != len(groups):
            raise ValueError("one block per group required")
        seen = []
        for blk, idx in zip(blocks, groups):
            if blk.shape != (len(idx), len(idx)):
                raise ValueError("block shape does not match its group size")
            if not np.allclose(blk, blk.conj().T, atol=1e-12):
                raise ValueError("Gram block is not Hermitian")
            if np.min(np.linalg.eigvalsh(blk)) <= 0.0:
                raise ValueError("Gram block is not positive definite")
            blk.setflags(write=False)
            seen.extend(idx)
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("groups must partition the mode indices")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "groups", groups)

    @property
    def n_modes(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass(frozen=True)
class StateCoefficients:
    """Coefficients c_n = <X, psi_n> of a state in the eigenvector basis."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __len__(self) -> int:
        return self.c.size


def coeff_array(x) -> np.ndarray:
    """Accept StateCoefficients or anything array-like."""
    return np.asarray(getattr(x, "c", x), dtype=complex)


@dataclass(frozen=True)
class SystemDefinition:
    """Modal description of a truncated Riesz-spectral boundary control system.

    `lifting_gram`, when provided, holds the exact inner products
    <B e_k, B e_l>; otherwise they are reconstructed from the truncated modal
    data.  `eigenfunctions` is an optional object exposing
    `phi_psi_gram(n_modes)` for biorthogonality checks against explicitly
    known eigenfunctions.
    """

    spectrum: Spectrum
    projections: tuple
    gram: GramData
    riesz_bounds: RieszBounds
    m: int
    basis_constant: float
    lifting_gram: np.ndarray | None = None
    eigenfunctions: object | None = None
    label: str = "system"
    relaxed_tol: float = field(default=RELAXED_CONVERGENCE_TOL, repr=False)

    def __post_init__(self):
        projections = tuple(self.projections)
        if len(projections) != self.m:
            raise ValueError("need one ModalProjection per input channel")
        n = len(self.spectrum)
        for proj in projections:
            if proj.b.size != n:
                raise ValueError("projection length does not match spectrum")
        if self.gram.n_modes != n:
            raise ValueError("Gram data does not cover the spectrum")
        if self.basis_constant <= 0.0:
            raise ValueError("basis constant must be positive")
        if self.lifting_gram is not None:
            lg = np.asarray(self.lifting_gram, dtype=complex)
            if lg.shape != (self.m, self.m):
                raise ValueError("lifting_gram must be m x m")
            lg.setflags(write=False)
            object.__setattr__(self, "lifting_gram", lg)
        object.__setattr__(self, "projections", projections)
        verdict = constraint_verdict(self.spectrum)
        if not verdict.passes:
            sums = relaxed_constraint_sum(self.spectrum, self.b_matrix)
            rel = sums.relative_increment()
            if verdict.omega0 >= 0.0 or not np.all(np.isfinite(sums.total)) or np.any(
                rel > self.relaxed_tol
            ):
                raise ValueError(
                    "system satisfies neither the eigenvalue constraints nor the "
                    "relaxed damping-sum condition"
                )

    @cached_property
    def b_matrix(self) -> np.ndarray:
        """Stacked (m, n_modes) lifting projections."""
        return np.vstack([p.b for p in self.projections])

    @cached_property
    def a_matrix(self) -> np.ndarray:
        return np.vstack([p.a for p in self.projections])

    @property
    def n_modes(self) -> int:
        return len(self.spectrum)

    @cached_property
    def verdict(self) -> ConstraintVerdict:
        return constraint_verdict(self.spectrum)

    @cached_property
    def _gram_stack(self):
        """(n_groups, s, s) stacked blocks plus index matrix, when uniform."""
        sizes = {len(g) for g in self.gram.groups}
        if len(sizes) != 1:
            return None
        idx = np.array(self.gram.groups, dtype=int)
        stack = np.array(self.gram.blocks, dtype=complex)
        return idx, stack

    def projection(self, k: int) -> ModalProjection:
        return self.projections[k]


def state_norm(system: SystemDefinition, coeffs) -> float:
    """Exact norm |sum_n c_n phi_n| via the Gram blocks."""
    c = coeff_array(coeffs)
    if c.size != system.n_modes:
        raise ValueError("coefficient length does not match the system")
    return float(state_norms(system, c[:, None])[0])


def state_norms(system: SystemDefinition, coeffs: np.ndarray) -> np.ndarray:
    """Vectorised norms for a (n_modes, nt) coefficient matrix."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 2 or c.shape[0] != system.n_modes:
        raise ValueError("expected a (n_modes, nt) coefficient matrix")
    packed = system._gram_stack
    if packed is not None:
        idx, stack = packed
        cg = c[idx, :]  # (n_groups, s, nt)
        q = np.einsum("git,gij,gjt->t", cg, stack, cg.conj())
    else:
        q = np.zeros(c.shape[1], dtype=complex)
        for blk, idx in zip(system.gram.blocks, system.gram.groups):
            cg = c[list(idx), :]
            q += np.einsum("it,ij,jt->t", cg, blk, cg.conj())
    return np.sqrt(np.maximum(q.real, 0.0))


def gram_of_modal_vectors(system: SystemDefinition, vectors: np.ndarray) -> np.ndarray:
    """Pairwise inner products <v_k, v_l> of states given by modal coefficients.

    `vectors` has shape (k, n_modes); the result is the k x k Hermitian Gram
    matrix in the state-space inner product.
    """
    v = np.asarray(vectors, dtype=complex)
    out = np.zeros((v.shape[0], v.shape[0]), dtype=complex)
    for blk, idx in zip(system.gram.blocks, system.gram.groups):
        vg = v[:, list(idx)]
        out += np.einsum("ki,ij,lj->kl", vg, blk, vg.conj())
    return out


def lifting_gram(system: SystemDefinition) -> np.ndarray:
    """<B e_k, B e_l> matrix: exact when the system declares it, else modal."""
    if system.lifting_gram is not None:
        return system.lifting_gram
    return gram_of_modal_vectors(system, system.b_matrix)


def stationary_coeffs(system: SystemDefinition, e) -> StateCoefficients:
    """Coefficients of the stationary state X_e with A X_e = 0, B X_e = e.

    Mode-wise, lambda_n x_n = lambda_n b_n(e) - a_n(e), i.e.
    x_n = b_n(e) - a_n(e) / lambda_n.
    """
    lam = system.spectrum.eigenvalues
    if np.any(lam == 0.0):
        raise ValueError("zero eigenvalue: stationary problem requires 0 in the resolvent set")
    e = np.asarray(e, dtype=complex).reshape(-1)
    if e.size != system.m:
        raise ValueError(f"boundary value must have {system.m} components")
    b_e = system.b_matrix.T @ e
    a_e = system.a_matrix.T @ e
    return StateCoefficients(b_e - a_e / lam)


def stationary_energies(system: SystemDefinition) -> np.ndarray:
    """Norms |X_{e,k}| of the stationary states for the canonical basis.

    X_{e,k} = B e_k - correction, with the correction's coefficients
    a_{k,n}/lambda_n.  The B e_k part uses the exact lifting Gram when the
    system carries one, so systems with A B = 0 get |X_{e,k}| = |B e_k|
    without truncation error.
    """
    lam = system.spectrum.eigenvalues
    if np.any(lam == 0.0):
        raise ValueError("zero eigenvalue: stationary problem requires 0 in the resolvent set")
    lg = lifting_gram(system)
    corr = system.a_matrix / lam[None, :]
    if not np.any(corr):
        return np.sqrt(np.maximum(np.diag(lg).real, 0.0))
    cross = np.diag(gram_of_modal_vectors_pair(system, system.b_matrix, corr)).real
    corr_sq = np.diag(gram_of_modal_vectors(system, corr)).real
    vals = np.diag(lg).real - 2.0 * cross + corr_sq
    return np.sqrt(np.maximum(vals, 0.0))


def gram_of_modal_vectors_pair(system: SystemDefinition, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Cross Gram <u_k, v_l> for two families of modal coefficient rows."""
    u = np.asarray(left, dtype=complex)
    v = np.asarray(right, dtype=complex)
    out = np.zeros((u.shape[0], v.shape[0]), dtype=complex)
    for blk, idx in zip(system.gram.blocks, system.gram.groups):
        out += np.einsum("ki,ij,lj->kl", u[:, list(idx)], blk, v[:, list(idx)].conj())
    return out


def biorthogonality_check(system: SystemDefinition, n_modes: int | None = None) -> float:
    """Max defect |<phi_i, psi_j> - delta_ij| over the first n_modes modes.

    Requires the system to expose explicit eigenfunction data (the built-in
    beam does; data-file systems generally do not).
    """
    if system.eigenfunctions is None:
        raise UnsupportedOperationError(
            f"{system.label!r} provides no explicit eigenfunction data"
        )
    n = system.n_modes if n_modes is None else min(n_modes, system.n_modes)
    gram = np.asarray(system.eigenfunctions.phi_psi_gram(n))
    return float(np.max(np.abs(gram - np.eye(n))))


# ---------------------------------------------------------------------------
# JSON system files


def _encode_complex_vector(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _decode_complex_array(data):
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def system_to_dict(system: SystemDefinition) -> dict:
    out = {
        "eigenvalues": _encode_complex_vector(system.spectrum.eigenvalues),
        "b": [_encode_complex_vector(p.b) for p in system.projections],
        "a": [_encode_complex_vector(p.a) for p in system.projections],
        "gram_blocks": [
            {
                "modes": list(idx),
                "matrix": [_encode_complex_vector(row) for row in blk],
            }
            for blk, idx in zip(system.gram.blocks, system.gram.groups)
        ],
        "m_R": system.riesz_bounds.m_R,
        "M_R": system.riesz_bounds.M_R,
        "m": system.m,
        "c_E": system.basis_constant,
    }
    if system.spectrum.declared_tail_bound is not None:
        out["tail_bound"] = system.spectrum.declared_tail_bound
    return out


def system_from_dict(data: dict, label: str = "system") -> SystemDefinition:
    eigenvalues = _decode_complex_array(data["eigenvalues"])
    spectrum = Spectrum(eigenvalues, declared_tail_bound=data.get("tail_bound"))
    m = int(data["m"])
    b = [_decode_complex_array(row) for row in data["b"]]
    a = [_decode_complex_array(row) for row in data["a"]]
    if len(b) != m or len(a) != m:
        raise ValueError("need one b and one a row per channel")
    projections = tuple(
        ModalProjection(channel=k, b=b[k], a=a[k]) for k in range(m)
    )
    blocks = []
    groups = []
    for blk in data["gram_blocks"]:
        groups.append(tuple(blk["modes"]))
        blocks.append(_decode_complex_array(blk["matrix"]))
    gram = GramData(blocks=tuple(blocks), groups=tuple(groups))
    return SystemDefinition(
        spectrum=spectrum,
        projections=projections,
        gram=gram,
        riesz_bounds=RieszBounds(float(data["m_R"]), float(data["M_R"])),
        m=m,
        basis_constant=float(data["c_E"]),
        label=label,
    )


def save_system(system: SystemDefinition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_dict(system), fh, indent=1)


def load_system(path) -> SystemDefinition:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return system_from_dict(data, label=str(path))
