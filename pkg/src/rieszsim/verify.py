"""Disturbance generation and empirical verification of the ISS estimates.

The verifier draws admissible disturbances and initial states, integrates
the modal dynamics, and compares the trajectory norm against a
certificate's right-hand side pointwise: plain exponential-ISS bounds,
their fading-memory refinements, and the construction of solutions for
merely continuous disturbances as limits of classical runs with mollified
data.
"""

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .certificates import ISSCertificate, certificate_thm1
from .quadrature import CompositeQuadrature
from .simulate import DisturbanceSignal, Trajectory, integrate_modes
from .system import (
    SystemDefinition,
    coeff_array,
    gram_of_modal_vectors,
    state_norm,
    state_norms,
)


class ConvergenceFailureError(RuntimeError):
    """Approximation levels stopped contracting."""

    def __init__(self, message, runs=None):
        super().__init__(message)
        self.runs = runs


# ---------------------------------------------------------------------------
# Sup-norm helpers


def _golden_max(f, a: float, b: float, iters: int = 60) -> float:
    """Maximum of a scalar function on [a, b] by golden-section search."""
    if b <= a:
        return f(a)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    return max(f1, f2, f(a), f(b))


def _refined_sup(norm_fn: Callable, t0: float, t1: float, n: int = 257) -> float:
    """Sup of a smooth nonnegative function: dense scan plus local refinement."""
    if t1 <= t0:
        return float(norm_fn(np.array([t0]))[0])
    grid = np.linspace(t0, t1, n)
    vals = np.asarray(norm_fn(grid))
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n - 1)]
    return float(_golden_max(lambda t: float(norm_fn(np.array([t]))[0]), a, b))


# ---------------------------------------------------------------------------
# Disturbance factories


def _as_times(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


def make_disturbance(
    kind: str,
    seed: int,
    amplitude: float,
    m: int,
    horizon: float = 10.0,
    flat_start: bool = False,
) -> DisturbanceSignal:
    """Deterministic-from-seed boundary disturbance of a declared class.

    kinds: "constant", "trig_poly" (smooth, exact derivative),
    "spline_C2" (natural cubic through random knots, exact derivative),
    "piecewise_linear_C0" (continuous only; refuses a derivative).
    Values are held constant outside [0, horizon] where applicable.
    """
    if amplitude <= 0.0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    if kind == "constant":
        v = rng.normal(size=m)
        v = v / np.linalg.norm(v)
        vec = amplitude * v

        def d(t):
            return np.repeat(vec[:, None], _as_times(t).size, axis=1)

        def d_dot(t):
            return np.zeros((m, _as_times(t).size))

        return DisturbanceSignal(
            m=m, smoothness="C2", representation="closed-form",
            d=d, d_dot=d_dot,
            sup_d=lambda a, b: float(amplitude),
            sup_u=lambda a, b: 0.0,
        )

    if kind == "trig_poly":
        n_harm = 3
        base = rng.uniform(0.6, 1.9)
        omegas = base * np.arange(1, n_harm + 1)
        ca = rng.normal(size=(m, n_harm))
        cb = rng.normal(size=(m, n_harm))
        scale = np.sum(np.hypot(ca, cb), axis=1, keepdims=True)
        ca = amplitude * ca / scale
        cb = amplitude * cb / scale

        def d(t):
            t = _as_times(t)
            arg = np.outer(omegas, t)
            return ca @ np.cos(arg) + cb @ np.sin(arg)

        def d_dot(t):
            t = _as_times(t)
            arg = np.outer(omegas, t)
            return (-ca * omegas) @ np.sin(arg) + (cb * omegas) @ np.cos(arg)

        def norm_fn(t):
            return np.linalg.norm(d(t), axis=0)

        def sup_d(t0, t1):
            n = max(65, int(8 * omegas[-1] * (t1 - t0) / math.pi) + 2)
            return _refined_sup(norm_fn, t0, t1, n)

        return DisturbanceSignal(
            m=m, smoothness="C2", representation="trig-polynomial",
            d=d, d_dot=d_dot, sup_d=sup_d, sup_u=lambda a, b: 0.0,
        )

    if kind == "spline_C2":
        knots = np.linspace(0.0, horizon, 9)
        vals = rng.normal(size=(knots.size, m))
        vals *= amplitude / np.max(np.abs(vals))
        spline = CubicSpline(knots, vals, bc_type="natural")
        dspline = spline.derivative()

        def d(t):
            return spline(_as_times(t)).T

        def d_dot(t):
            return dspline(_as_times(t)).T

        def sup_d(t0, t1):
            return _spline_sup(spline, t0, t1)

        return DisturbanceSignal(
            m=m, smoothness="C2", representation="spline",
            d=d, d_dot=d_dot, sup_d=sup_d, sup_u=lambda a, b: 0.0,
        )

    if kind == "piecewise_linear_C0":
        knots = np.linspace(0.0, horizon, 17)
        vals = rng.normal(size=(m, knots.size))
        vals *= amplitude / np.max(np.abs(vals))
        if flat_start:
            vals[:, 0] = vals[:, 1]

        def d(t):
            t = _as_times(t)
            return np.vstack([np.interp(t, knots, vals[k]) for k in range(m)])

        def sup_d(t0, t1):
            if t1 <= t0:
                return float(np.linalg.norm(d(np.array([t0])), axis=0)[0])
            inside = knots[(knots >= t0) & (knots <= t1)]
            cand = np.concatenate(([t0], inside, [t1]))
            return float(np.max(np.linalg.norm(d(cand), axis=0)))

        return DisturbanceSignal(
            m=m, smoothness="C0", representation="piecewise-linear",
            d=d, sup_d=sup_d, sup_u=lambda a, b: 0.0,
        )

    raise ValueError(f"unknown disturbance kind {kind!r}")


def _spline_sup(spline: CubicSpline, t0: float, t1: float) -> float:
    """Exact sup of |spline(t)| on [t0, t1] via per-piece polynomial roots."""
    if t1 <= t0:
        return float(np.linalg.norm(spline(t0)))
    xs = spline.x
    cand = [t0, t1]
    lo = np.searchsorted(xs, t0, side="right") - 1
    hi = np.searchsorted(xs, t1, side="left")
    for p in range(max(lo, 0), min(hi, xs.size - 1)):
        a, b = max(xs[p], t0), min(xs[p + 1], t1)
        if b <= a:
            continue
        cand.extend((a, b))
        # |d|^2 on this piece is a degree-6 polynomial in (t - xs[p])
        coeffs = spline.c[:, p, :]  # (4, m), descending powers of local tau
        q = np.zeros(7)
        for k in range(coeffs.shape[1]):
            q += np.polymul(coeffs[:, k], coeffs[:, k])
        roots = np.roots(np.polyder(q))
        for r in roots:
            if abs(r.imag) < 1e-12:
                t = xs[p] + r.real
                if a < t < b:
                    cand.append(t)
    cand = np.asarray(cand, dtype=float)
    return float(np.max(np.linalg.norm(spline(cand), axis=1)))


@dataclass(frozen=True)
class DistributedPart:
    """Distributed disturbance sum_r g_r(t) U_r with modal direction rows U_r."""

    directions: np.ndarray  # (R, n_modes)
    gram: np.ndarray  # (R, R) pairwise inner products of the directions
    envelopes: Callable  # times -> (R, nt)
    envelope_dot: Callable | None = None

    def u_coeffs(self, t, idx=None):
        g = np.atleast_2d(self.envelopes(_as_times(t)))
        rows = self.directions if idx is None else self.directions[:, idx]
        return np.einsum("rt,rn->nt", g, rows)

    def u_norm(self, t):
        g = np.atleast_2d(self.envelopes(_as_times(t)))
        q = np.einsum("rt,rs,st->t", g, self.gram, np.conj(g))
        return np.sqrt(np.maximum(q.real, 0.0))

    def sup_u(self, t0, t1):
        return _refined_sup(self.u_norm, t0, t1, 513)


def make_distributed(system: SystemDefinition, seed: int, amplitude: float, n_waves: int = 3) -> DistributedPart:
    """Smooth random distributed disturbance with decaying modal content."""
    if amplitude <= 0.0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    n = system.n_modes
    group_of = np.empty(n, dtype=int)
    for j, g in enumerate(system.gram.groups):
        for i in g:
            group_of[i] = j
    decay = 1.0 / (1.0 + group_of.astype(float)) ** 2
    directions = rng.normal(size=(n_waves, n)) * decay[None, :]
    gram = gram_of_modal_vectors(system, directions)
    norms = np.sqrt(np.maximum(np.diag(gram).real, 1e-300))
    directions = amplitude * directions / norms[:, None] / n_waves
    gram = gram_of_modal_vectors(system, directions)
    omegas = rng.uniform(0.5, 2.0, size=n_waves)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_waves)

    def envelopes(t):
        return np.cos(np.outer(omegas, _as_times(t)) + phases[:, None])

    def envelope_dot(t):
        return -omegas[:, None] * np.sin(np.outer(omegas, _as_times(t)) + phases[:, None])

    return DistributedPart(
        directions=directions, gram=gram, envelopes=envelopes, envelope_dot=envelope_dot
    )


def with_distributed(signal: DisturbanceSignal, part: DistributedPart) -> DisturbanceSignal:
    return dataclasses.replace(
        signal, u_coeffs=part.u_coeffs, u_norm=part.u_norm, sup_u=part.sup_u
    )


def random_state(system: SystemDefinition, seed: int, amplitude: float) -> np.ndarray:
    """Random modal coefficients with group-wise decay.

    When a group's eigenvalues form a conjugate pair the coefficients are
    drawn as a conjugate pair, which keeps physical states real-valued.
    """
    rng = np.random.default_rng(seed)
    lam = system.spectrum.eigenvalues
    c = np.zeros(system.n_modes, dtype=complex)
    for j, g in enumerate(system.gram.groups):
        scale = amplitude / (1.0 + j) ** 2
        if len(g) == 2 and lam[g[1]] == np.conj(lam[g[0]]) and lam[g[0]].imag != 0.0:
            z = scale * (rng.normal() + 1j * rng.normal())
            c[g[0]] = z
            c[g[1]] = np.conj(z)
        else:
            for i in g:
                c[i] = scale * rng.normal()
    return c


# ---------------------------------------------------------------------------
# ISS verification


@dataclass
class VerificationReport:
    """Pointwise comparison of a trajectory norm against a certificate bound."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    min_margin: float
    sup_d: np.ndarray
    sup_u: np.ndarray
    rhs_scale: float
    violation_tol: float
    n_violations: int
    config: dict
    compatibility_shift: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "min_margin": self.min_margin,
            "n_violations": self.n_violations,
            "samples": [
                {
                    "t": float(t),
                    "lhs": float(l),
                    "rhs": float(r),
                    "margin": float(g),
                }
                for t, l, r, g in zip(self.times, self.lhs, self.rhs, self.margins)
            ],
        }


def _check_sup_evaluators(dist: DisturbanceSignal) -> None:
    if dist.sup_d is None:
        raise ValueError("signal provides no sup-norm evaluator for d")
    if dist.u_coeffs is not None and (dist.sup_u is None or dist.u_norm is None):
        raise ValueError(
            "signal carries a distributed part without norm evaluators; "
            "its bound cannot be formed honestly"
        )


def _batched_golden_max(norm_fn, lo: np.ndarray, hi: np.ndarray, iters: int = 40) -> np.ndarray:
    """Golden-section maxima of a vectorised function over many brackets."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a = lo.copy()
    b = hi.copy()
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1 = np.asarray(norm_fn(x1))
    f2 = np.asarray(norm_fn(x2))
    for _ in range(iters):
        take = f1 < f2
        a = np.where(take, x1, a)
        b = np.where(take, b, x2)
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1 = np.asarray(norm_fn(x1))
        f2 = np.asarray(norm_fn(x2))
    return np.maximum(f1, f2)


#: representations whose sup evaluator is exact and cheap per interval
_EXACT_SUP_REPRESENTATIONS = ("closed-form", "piecewise-linear", "spline")


class SupSampler:
    """Per-grid sup-norm data of a signal, shared across certificate checks.

    Exact per-interval sups come from the signal's own evaluator where the
    representation allows; smooth representations use a batched local search
    started from a refined sample table.  Weighted values use only valid
    lower candidates, so an apparent violation is never an artefact of
    over-estimating the bound.
    """

    def __init__(self, dist: DisturbanceSignal, times: np.ndarray, refine: int = 8):
        _check_sup_evaluators(dist)
        self.times = np.asarray(times, dtype=float)
        n_int = self.times.size - 1
        frac = np.arange(refine + 1) / refine
        self.fine = self.times[:-1, None] + np.diff(self.times)[:, None] * frac[None, :]
        flat = self.fine.ravel()

        def d_norm_fn(ts):
            return np.linalg.norm(np.atleast_2d(dist.d(ts)), axis=0)

        self.d_norm = d_norm_fn(flat).reshape(self.fine.shape)
        if dist.representation in _EXACT_SUP_REPRESENTATIONS:
            self.int_d = np.array(
                [dist.sup_d(float(self.times[i]), float(self.times[i + 1])) for i in range(n_int)]
            )
        else:
            self.int_d = self._local_maxima(d_norm_fn, self.d_norm)
        have_u = dist.u_norm is not None
        if have_u:
            self.u_norm = np.asarray(dist.u_norm(flat)).reshape(self.fine.shape)
            self.int_u = self._local_maxima(dist.u_norm, self.u_norm)
        else:
            self.u_norm = np.zeros_like(self.fine)
            self.int_u = np.zeros(n_int)

    def _local_maxima(self, norm_fn, samples: np.ndarray) -> np.ndarray:
        """Per-interval sups: refined samples plus a batched golden search."""
        j = np.argmax(samples, axis=1)
        rows = np.arange(samples.shape[0])
        lo = self.fine[rows, np.maximum(j - 1, 0)]
        hi = self.fine[rows, np.minimum(j + 1, samples.shape[1] - 1)]
        refined = _batched_golden_max(norm_fn, lo, hi)
        return np.maximum(samples.max(axis=1), refined)

    def running(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact running sups over [t_0, t_i] per grid point."""
        nt = self.times.size
        sup_d = np.empty(nt)
        sup_u = np.empty(nt)
        sup_d[0] = self.d_norm[0, 0]
        sup_u[0] = self.u_norm[0, 0]
        np.maximum.accumulate(self.int_d, out=sup_d[1:])
        np.maximum.accumulate(self.int_u, out=sup_u[1:])
        sup_d[1:] = np.maximum(sup_d[1:], sup_d[0])
        sup_u[1:] = np.maximum(sup_u[1:], sup_u[0])
        return sup_d, sup_u

    def weighted(self, rate: float) -> tuple[np.ndarray, np.ndarray]:
        """Running sup of exp(-rate (t - tau)) |signal(tau)| per grid point.

        The decay factorises across intervals, giving an exact recursion
        with per-interval candidates: weighted refined samples and the exact
        interval sup damped over the full interval width.  At rate = 0 this
        reproduces `running` exactly.
        """
        if rate == 0.0:
            return self.running()
        nt = self.times.size
        out_d = np.empty(nt)
        out_u = np.empty(nt)
        h = np.diff(self.times)
        damp = np.exp(-rate * h)
        w = np.exp(-rate * (self.times[1:, None] - self.fine))
        cand_d = np.maximum((w * self.d_norm).max(axis=1), damp * self.int_d)
        cand_u = np.maximum((w * self.u_norm).max(axis=1), damp * self.int_u)
        wd = self.d_norm[0, 0]
        wu = self.u_norm[0, 0]
        out_d[0], out_u[0] = wd, wu
        for i in range(nt - 1):
            wd = max(wd * damp[i], cand_d[i])
            wu = max(wu * damp[i], cand_u[i])
            out_d[i + 1] = wd
            out_u[i + 1] = wu
        return out_d, out_u


def _running_sups(dist: DisturbanceSignal, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return SupSampler(dist, times).running()


def _bound_report(
    system: SystemDefinition,
    certificate: ISSCertificate,
    traj: Trajectory,
    x0_norm: float,
    sup_d: np.ndarray,
    sup_u: np.ndarray,
    config: dict,
    violation_tol: float,
    shift: float,
) -> VerificationReport:
    if certificate.infinite:
        raise ValueError("cannot verify against an infinite certificate")
    t = traj.times - traj.times[0]
    rhs = certificate.C0 * np.exp(-certificate.kappa0 * t) * x0_norm + certificate.C1 * sup_d
    if np.any(sup_u > 0.0):
        if certificate.C2 is None:
            raise ValueError(
                f"certificate {certificate.method!r} carries no distributed-term constant"
            )
        rhs = rhs + certificate.C2 * sup_u
    margins = rhs - traj.norms
    rhs_scale = float(np.max(rhs))
    tol = violation_tol * rhs_scale
    return VerificationReport(
        times=traj.times,
        lhs=traj.norms,
        rhs=rhs,
        margins=margins,
        min_margin=float(np.min(margins)),
        sup_d=sup_d,
        sup_u=sup_u,
        rhs_scale=rhs_scale,
        violation_tol=violation_tol,
        n_violations=int(np.sum(margins < -tol)),
        config=config,
        compatibility_shift=shift,
    )


def compatible_initial_state(system, x0, dist, t0: float = 0.0):
    """Interior coefficients plus the boundary lift of d(t0).

    Returns (coefficients, shift_norm); the recorded shift is what classical
    semantics added to make the state compatible with the disturbance.
    """
    return _prepare_initial_state(system, x0, dist, "classical", t0)


def _prepare_initial_state(system, x0, dist, semantics, t0: float):
    """Classical semantics: interpret x0 as the interior part and add the
    boundary lift of d(t0), recording the size of the shift."""
    x0c = coeff_array(x0)
    shift = 0.0
    if semantics == "classical":
        if dist is not None and dist.smoothness != "C2":
            raise ValueError("classical semantics requires a C2 boundary disturbance")
        if dist is not None:
            d0 = np.atleast_2d(dist.d(np.array([t0])))[:, 0]
            lift = system.b_matrix.T @ d0
            x0c = x0c + lift
            shift = state_norm(system, lift)
    elif semantics != "weak":
        raise ValueError("semantics must be 'classical' or 'weak'")
    return x0c, shift


def verify_iss(
    system: SystemDefinition,
    certificate: ISSCertificate,
    x0,
    dist: DisturbanceSignal,
    times,
    semantics: str = "classical",
    violation_tol: float = 1e-9,
    substep_target: float = 10.0,
    config: dict | None = None,
) -> VerificationReport:
    """Check |X(t)| <= C0 e^{-kappa0 t}|X0| + C1 sup|d| + C2 sup|U| pointwise."""
    times = np.asarray(times, dtype=float)
    x0c, shift = _prepare_initial_state(system, x0, dist, semantics, float(times[0]))
    traj = integrate_modes(system, x0c, dist, times, substep_target)
    sup_d, sup_u = _running_sups(dist, times)
    x0_norm = state_norm(system, x0c)
    return _bound_report(
        system, certificate, traj, x0_norm, sup_d, sup_u,
        config or {}, violation_tol, shift,
    )


def verify_trajectory(
    system: SystemDefinition,
    certificate: ISSCertificate,
    traj: Trajectory,
    dist: DisturbanceSignal,
    violation_tol: float = 1e-9,
    config: dict | None = None,
) -> VerificationReport:
    """Check an already-computed trajectory against a certificate bound.

    Used for weak-solution limits (the bound is stated for the original,
    possibly nonsmooth, disturbance) and to evaluate several certificate
    families on one simulation.
    """
    sup_d, sup_u = _running_sups(dist, traj.times)
    x0_norm = float(traj.norms[0])
    return _bound_report(
        system, certificate, traj, x0_norm, sup_d, sup_u,
        config or {}, violation_tol, 0.0,
    )


def verify_fading_memory(
    system: SystemDefinition,
    certificate: ISSCertificate,
    x0,
    dist: DisturbanceSignal,
    times,
    epsilon: float,
    semantics: str = "classical",
    violation_tol: float = 1e-9,
    substep_target: float = 10.0,
    refine: int = 8,
    config: dict | None = None,
) -> VerificationReport:
    """Check the fading-memory variant: past disturbance values are damped by
    exp(-eps kappa0 (t - tau)) and the gains grow by 1/(1 - eps)."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    times = np.asarray(times, dtype=float)
    x0c, shift = _prepare_initial_state(system, x0, dist, semantics, float(times[0]))
    traj = integrate_modes(system, x0c, dist, times, substep_target)
    wd, wu = SupSampler(dist, times, refine).weighted(epsilon * certificate.kappa0)
    scaled = ISSCertificate(
        kappa0=certificate.kappa0,
        C0=certificate.C0,
        C1=certificate.C1 / (1.0 - epsilon),
        C2=None if certificate.C2 is None else certificate.C2 / (1.0 - epsilon),
        method=certificate.method,
        epsilon=epsilon,
        degenerate=certificate.degenerate,
    )
    x0_norm = state_norm(system, x0c)
    return _bound_report(
        system, scaled, traj, x0_norm, wd, wu, config or {}, violation_tol, shift
    )


# ---------------------------------------------------------------------------
# Weak solutions by mollified approximation


class _BumpKernel:
    """Normalised smooth bump on (-1, 1) sampled on a fixed quadrature grid."""

    def __init__(self, panels: int = 48, order: int = 8):
        quad = CompositeQuadrature(panels=panels, order=order, a=-1.0, b=1.0)
        rho = np.exp(-1.0 / (1.0 - quad.nodes**2))
        z = float(quad.weights @ rho)
        self.nodes = quad.nodes
        self.weights = quad.weights * rho / z  # sums to 1: constants reproduced
        drho = rho * (-2.0 * quad.nodes) / (1.0 - quad.nodes**2) ** 2
        self.dweights = quad.weights * drho / z


_KERNEL = _BumpKernel()


def mollify(dist: DisturbanceSignal, h: float) -> DisturbanceSignal:
    """Smooth a signal by convolution with a bump at scale h.

    Values outside the signal's domain enter through the signal's own
    constant extension.  The mollified signal reports an exact derivative
    obtained by moving the derivative onto the kernel, so it qualifies for
    classical-solution semantics.
    """
    if h <= 0.0:
        raise ValueError("mollification scale must be positive")
    kern = _KERNEL
    base_d = dist.d

    def d(t):
        t = _as_times(t)
        shifted = t[None, :] - h * kern.nodes[:, None]  # (K, nt)
        vals = np.stack([np.atleast_2d(base_d(row)) for row in shifted])  # (K, m, nt)
        return np.einsum("k,kmt->mt", kern.weights, vals)

    def d_dot(t):
        t = _as_times(t)
        shifted = t[None, :] - h * kern.nodes[:, None]
        vals = np.stack([np.atleast_2d(base_d(row)) for row in shifted])
        return np.einsum("k,kmt->mt", kern.dweights, vals) / h

    def norm_fn(t):
        return np.linalg.norm(d(t), axis=0)

    def sup_d(t0, t1):
        return _refined_sup(norm_fn, t0, t1, max(129, int(64 * (t1 - t0)) + 2))

    u_fields = {}
    if dist.u_coeffs is not None:
        base_u = dist.u_coeffs

        def u_coeffs(t, idx=None):
            t = _as_times(t)
            shifted = t[None, :] - h * kern.nodes[:, None]
            vals = np.stack([np.atleast_2d(base_u(row, idx)) for row in shifted])
            return np.einsum("k,knt->nt", kern.weights, vals)

        # the exact norm of the mollified distributed part needs the system
        # Gram; it is recomputed where needed rather than approximated here
        u_fields = {"u_coeffs": u_coeffs, "u_norm": None, "sup_u": None}
    return dataclasses.replace(
        dist,
        smoothness="C2",
        representation=f"mollified-{dist.representation}",
        d=d,
        d_dot=d_dot,
        sup_d=sup_d,
        **u_fields,
    )


@dataclass
class ApproximationRun:
    """One mollification level of the weak-solution construction."""

    index: int
    h: float
    x0: np.ndarray
    d0: np.ndarray
    sup_to_prev: float | None
    cauchy_bound_prev: float | None
    sup_to_limit: float


@dataclass
class WeakSolutionResult:
    trajectory: Trajectory
    runs: list
    initial_defect: float


def _sup_gap(fn_a, fn_b, times: np.ndarray, refine: int = 4) -> float:
    """Sup over a refined grid of |a(t) - b(t)| (vector 2-norm per time)."""
    fine = np.linspace(times[0], times[-1], refine * (times.size - 1) + 1)
    va = np.atleast_2d(fn_a(fine))
    vb = np.atleast_2d(fn_b(fine))
    return float(np.max(np.linalg.norm(va - vb, axis=0)))


def weak_solution_by_approximation(
    system: SystemDefinition,
    x0,
    dist: DisturbanceSignal,
    times,
    n_levels: int = 4,
    h0: float = 0.25,
    certificate: ISSCertificate | None = None,
    substep_target: float = 10.0,
) -> WeakSolutionResult:
    """Realise the trajectory for continuous data as a limit of classical runs.

    Builds mollified C2 boundary data d_j at scales h0 / 2^j, compatible
    initial states X0_j = (X0 - lift(d(0))) + lift(d_j(0)), integrates each
    level classically, and records the contraction of consecutive levels
    against the certificate-derived Cauchy bound
    C0 |X0_j - X0_k| + C1 sup|d_j - d_k| + C2 sup|U_j - U_k|.
    """
    if n_levels < 2:
        raise ValueError("need at least two approximation levels")
    cert = certificate or certificate_thm1(system)
    times = np.asarray(times, dtype=float)
    x0c = coeff_array(x0)
    d0 = np.atleast_2d(dist.d(np.array([times[0]])))[:, 0]
    interior = x0c - system.b_matrix.T @ d0

    levels = []
    for j in range(n_levels):
        h = h0 / 2.0**j
        mdist = mollify(dist, h)
        dj0 = np.atleast_2d(mdist.d(np.array([times[0]])))[:, 0]
        x0j = interior + system.b_matrix.T @ dj0
        traj = integrate_modes(system, x0j, mdist, times, substep_target)
        levels.append((j, h, mdist, x0j, dj0, traj))

    limit = levels[-1][5]
    runs = []
    prev = None
    distances = []
    for j, h, mdist, x0j, dj0, traj in levels:
        sup_prev = None
        bound_prev = None
        if prev is not None:
            _, _, pdist, px0, _, ptraj = prev
            sup_prev = float(np.max(state_norms(system, traj.coeffs - ptraj.coeffs)))
            d_gap = _sup_gap(mdist.d, pdist.d, times)
            u_gap = 0.0
            if mdist.u_coeffs is not None:

                def u_diff_norm(ts, a=mdist, b=pdist):
                    return state_norms(
                        system, a.u_coeffs(ts) - b.u_coeffs(ts)
                    )

                fine = np.linspace(times[0], times[-1], 4 * (times.size - 1) + 1)
                u_gap = float(np.max(u_diff_norm(fine)))
            x0_gap = state_norm(system, x0j - px0)
            bound_prev = cert.C0 * x0_gap + cert.C1 * d_gap
            if u_gap > 0.0:
                if cert.C2 is None:
                    raise ValueError("certificate lacks C2 for distributed data")
                bound_prev += cert.C2 * u_gap
            distances.append(sup_prev)
        sup_limit = float(np.max(state_norms(system, traj.coeffs - limit.coeffs)))
        runs.append(
            ApproximationRun(
                index=j, h=h, x0=x0j, d0=dj0,
                sup_to_prev=sup_prev, cauchy_bound_prev=bound_prev,
                sup_to_limit=sup_limit,
            )
        )
        prev = (j, h, mdist, x0j, dj0, traj)

    if any(b > a for a, b in zip(distances, distances[1:])):
        raise ConvergenceFailureError(
            f"approximation levels are not contracting: {distances}", runs=runs
        )
    initial_defect = state_norm(system, limit.coeffs[:, 0] - x0c)
    return WeakSolutionResult(trajectory=limit, runs=runs, initial_defect=initial_defect)


# ---------------------------------------------------------------------------
# Seeded verification campaigns


@dataclass
class CampaignRecord:
    draw: int
    kind: str
    method: str
    epsilon: float | None
    min_margin: float
    rhs_scale: float
    n_violations: int


@dataclass
class CampaignResult:
    records: list
    n_violations: int
    worst_relative_margin: float
    config: dict

    def worst_record(self) -> "CampaignRecord":
        return min(self.records, key=lambda r: r.min_margin / max(r.rhs_scale, 1e-300))


def run_campaign(
    system: SystemDefinition,
    certificates: dict,
    times,
    n_draws: int,
    seed: int,
    amplitude: float = 1.0,
    fading_methods: tuple = (),
    fading_epsilons: tuple = (0.0, 0.5),
    include_distributed: bool = True,
    violation_tol: float = 1e-9,
    substep_target: float = 10.0,
) -> CampaignResult:
    """Draw seeded C2 disturbance/state pairs and check every certificate.

    Each draw is simulated once; all certificate families (and fading-memory
    variants for the listed methods) are evaluated against that trajectory.
    Identical seeds and configuration reproduce results bit for bit.
    """
    times = np.asarray(times, dtype=float)
    records = []
    kinds = ("trig_poly", "spline_C2")
    for i in range(n_draws):
        base = seed + 7919 * i
        kind = kinds[i % len(kinds)]
        dist = make_disturbance(kind, base, amplitude, system.m)
        if include_distributed:
            dist = with_distributed(dist, make_distributed(system, base + 1, amplitude))
        x0 = random_state(system, base + 2, amplitude)
        x0c, _ = _prepare_initial_state(system, x0, dist, "classical", float(times[0]))
        traj = integrate_modes(system, x0c, dist, times, substep_target)
        x0_norm = state_norm(system, x0c)
        sampler = SupSampler(dist, times)
        sup_d, sup_u = sampler.running()
        for name, cert in certificates.items():
            rep = _bound_report(
                system, cert, traj, x0_norm, sup_d, sup_u, {}, violation_tol, 0.0
            )
            records.append(
                CampaignRecord(i, kind, name, None, rep.min_margin, rep.rhs_scale, rep.n_violations)
            )
        for name in fading_methods:
            cert = certificates[name]
            for eps in fading_epsilons:
                wd, wu = sampler.weighted(eps * cert.kappa0)
                scaled = ISSCertificate(
                    kappa0=cert.kappa0,
                    C0=cert.C0,
                    C1=cert.C1 / (1.0 - eps),
                    C2=None if cert.C2 is None else cert.C2 / (1.0 - eps),
                    method=cert.method,
                    epsilon=eps,
                    degenerate=cert.degenerate,
                )
                rep = _bound_report(
                    system, scaled, traj, x0_norm, wd, wu, {}, violation_tol, 0.0
                )
                records.append(
                    CampaignRecord(i, kind, name, eps, rep.min_margin, rep.rhs_scale, rep.n_violations)
                )
    total = sum(r.n_violations for r in records)
    worst = min(r.min_margin / max(r.rhs_scale, 1e-300) for r in records)
    return CampaignResult(
        records=records,
        n_violations=total,
        worst_relative_margin=worst,
        config={
            "n_draws": n_draws,
            "seed": seed,
            "amplitude": amplitude,
            "methods": sorted(certificates),
            "fading_methods": list(fading_methods),
            "fading_epsilons": list(fading_epsilons),
            "t_final": float(times[-1]),
            "grid_points": int(times.size),
            "violation_tol": violation_tol,
        },
    )
