import math

import numpy as np
import pytest

from rieszsim.beam import beam_system
from rieszsim.certificates import (
    CertificateUnavailableError,
    ISSCertificate,
    beam_c2_tight,
    beam_certificates_v1,
    beam_certificates_v2,
    beam_v2_with_c2,
    best_v2_c0,
    certificate_for_method,
    certificate_relaxed,
    certificate_thm1,
    certificate_thm2,
    combined_c1_curve,
    operator_norm_ab,
    v2_advantage_interval,
)
from rieszsim.spectral import RieszBounds, Spectrum
from rieszsim.system import GramData, ModalProjection, SystemDefinition

ALPHAS = (0.3, 0.5, 2.0, 5.0)


def printed_v1(alpha):
    """Inline arithmetic on the closed forms, kept separate from the library."""
    if alpha < 1.0:
        c0 = math.sqrt((1 + alpha) / (1 - alpha))
        return alpha * math.pi**2, c0, 2.0 / (alpha * math.sqrt(3)) * c0, c0 / (alpha * math.pi**2)
    s = math.sqrt(alpha**2 - 1)
    c0 = math.sqrt((alpha + 1) / (alpha - 1))
    k0 = (alpha - s) * math.pi**2
    return k0, c0, 2.0 / math.sqrt(3) * c0, c0 / k0


class TestDirectCertificate:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_matches_printed_closed_forms(self, alpha):
        cert = certificate_thm1(beam_system(alpha, 64))
        k0, c0, c1, c2 = printed_v1(alpha)
        assert cert.kappa0 == pytest.approx(k0, rel=1e-12)
        assert cert.C0 == pytest.approx(c0, rel=1e-12)
        assert cert.C1 == pytest.approx(c1, rel=1e-6)
        assert cert.C2 == pytest.approx(c2, rel=1e-12)

    def test_half_alpha_values(self):
        cert = certificate_thm1(beam_system(0.5, 32))
        assert cert.C0 == pytest.approx(math.sqrt(3.0), rel=1e-14)
        assert cert.C1 == pytest.approx(4.0, rel=1e-12)
        assert cert.C2 == pytest.approx(2.0 * math.sqrt(3.0) / math.pi**2, rel=1e-14)

    def test_tight_frame_gives_unit_c0(self):
        sys = SystemDefinition(
            spectrum=Spectrum([-2.0]),
            projections=(ModalProjection(0, [1.0], [0.0]),),
            gram=GramData((np.eye(1),), ((0,),)),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        assert certificate_thm1(sys).C0 == 1.0

    def test_unavailable_when_verdict_fails(self):
        # valid systems always pass the verdict (a finite list with negative
        # growth bound has a finite ratio), so plant a failing spectrum
        sys = SystemDefinition(
            spectrum=Spectrum([-1.0, -2.0]),
            projections=(ModalProjection(0, [1.0, 1.0], [0.0, 0.0]),),
            gram=GramData((np.eye(1), np.eye(1)), ((0,), (1,))),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        object.__setattr__(sys, "spectrum", Spectrum([-1.0, 1.0j]))
        with pytest.raises(CertificateUnavailableError, match="relaxed"):
            certificate_thm1(sys)

    def test_relaxed_beats_direct_for_weak_damping_chains(self):
        # lambda_n = -1 + i n: the listed ratio grows with the truncation,
        # so the direct constant blows up while the damping-sum constant
        # stays uniformly bounded
        n = np.arange(1.0, 201.0)
        lam = -1.0 + 1j * n
        sys = SystemDefinition(
            spectrum=Spectrum(lam),
            projections=(ModalProjection(0, 1.0 / n**2, np.zeros_like(n)),),
            gram=GramData(tuple(np.eye(1) for _ in n), tuple((i,) for i in range(n.size))),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        direct = certificate_thm1(sys)
        relaxed = certificate_relaxed(sys)
        assert 0.0 < relaxed.C1 < direct.C1

    def test_ab_norm_zero_for_beam(self):
        assert operator_norm_ab(beam_system(2.0, 8)) == 0.0


class TestEnergyCertificate:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_equals_direct_on_beam(self, alpha):
        sys = beam_system(alpha, 32)
        assert certificate_thm2(sys).C1 == pytest.approx(certificate_thm1(sys).C1, rel=1e-12)

    def test_stationary_scaling(self, beam_alpha2):
        from rieszsim.system import state_norm, stationary_coeffs

        x1 = stationary_coeffs(beam_alpha2, [1.0, 0.0])
        x2 = stationary_coeffs(beam_alpha2, [2.0, 0.0])
        assert np.allclose(x2.c, 2.0 * x1.c)
        assert state_norm(beam_alpha2, x2) == pytest.approx(
            2.0 * state_norm(beam_alpha2, x1), rel=1e-14
        )

    def test_degenerate_flag_when_stationary_states_vanish(self):
        lam = np.array([-1.0, -2.0])
        b = np.array([0.7, -0.4])
        sys = SystemDefinition(
            spectrum=Spectrum(lam),
            projections=(ModalProjection(0, b, lam * b),),
            gram=GramData((np.eye(1), np.eye(1)), ((0,), (1,))),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        cert = certificate_thm2(sys)
        assert cert.degenerate
        assert cert.C1 == 0.0


class TestRelaxedCertificate:
    def test_beam_within_quarter_of_direct(self):
        sys = beam_system(2.0, 1000)
        r = certificate_relaxed(sys)
        t = certificate_thm1(sys)
        assert abs(r.C1 - t.C1) / t.C1 < 0.25
        # closed-form oracle: C1 = sqrt(m * M_R * 2 * sum_n 8/(3 n^2 pi^2))
        n = np.arange(1, 1001)
        total = np.sum(8.0 / (3.0 * n**2 * math.pi**2))
        oracle = math.sqrt(2.0 * 1.5 * 2.0 * total)
        assert r.C1 == pytest.approx(oracle, rel=1e-12)

    def test_degenerate_zero_projections(self):
        sys = SystemDefinition(
            spectrum=Spectrum([-1.0, -2.0]),
            projections=(ModalProjection(0, [0.0, 0.0], [0.0, 0.0]),),
            gram=GramData((np.eye(1), np.eye(1)), ((0,), (1,))),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        cert = certificate_relaxed(sys)
        assert cert.degenerate and cert.C1 == 0.0

    def test_unavailable_for_divergent_sums(self):
        n = np.arange(1.0, 200.0)
        lam = -1.0 + 1j * n
        sys = SystemDefinition(
            spectrum=Spectrum(lam),
            projections=(ModalProjection(0, 1.0 / n**2, np.zeros_like(n)),),
            gram=GramData(tuple(np.eye(1) for _ in n), tuple((i,) for i in range(n.size))),
            riesz_bounds=RieszBounds(1.0, 1.0),
            m=1,
            basis_constant=1.0,
        )
        # terms ~ n^2 / n^4 = 1/n^2 converge, so this one is available
        certificate_relaxed(sys)
        with pytest.raises(CertificateUnavailableError):
            certificate_relaxed(sys, convergence_tol=1e-9)


class TestBeamClosedForms:
    def test_v1_values(self):
        assert beam_certificates_v1(0.5).C1 == pytest.approx(4.0, rel=1e-14)
        assert beam_certificates_v1(2.0).C1 == pytest.approx(2.0, rel=1e-14)

    def test_v1_infinite_marker_at_one(self):
        cert = beam_certificates_v1(1.0)
        assert cert.infinite
        assert cert.C0 == math.inf and cert.C1 == math.inf

    def test_v1_monotone_decreasing_with_limits(self):
        grid = np.linspace(1.05, 400.0, 400)
        c0s = [beam_certificates_v1(a).C0 for a in grid]
        c1s = [beam_certificates_v1(a).C1 for a in grid]
        assert np.all(np.diff(c0s) < 0.0)
        assert np.all(np.diff(c1s) < 0.0)
        assert c0s[-1] == pytest.approx(1.0, abs=3e-3)
        assert c1s[-1] == pytest.approx(2.0 / math.sqrt(3.0), abs=4e-3)

    @pytest.mark.parametrize("alpha", (1.5, 2.0, 10.0))
    def test_tight_c2_series_vs_closed_form(self, alpha):
        res = beam_c2_tight(alpha, n_terms=200)
        assert abs(res.series - res.closed_form) / res.closed_form < 1e-6
        assert abs(res.series - res.closed_form) <= res.tail_bound * 1.01 + 1e-15

    def test_tight_c2_limit(self):
        assert beam_c2_tight(1e9, 50).closed_form == pytest.approx(
            1.0 / (3.0 * math.sqrt(10.0)), rel=1e-8
        )
        # the series side stays usable at extreme damping too
        res = beam_c2_tight(1e9, 50)
        assert res.series == pytest.approx(res.closed_form, rel=1e-4)

    def test_tight_c2_rejects_low_alpha(self):
        with pytest.raises(ValueError):
            beam_c2_tight(1.0)
        with pytest.raises(ValueError):
            beam_c2_tight(0.5)

    def test_v2_continuous_at_one(self):
        # both branch formulas give 16/sqrt(3) at alpha = 1
        up = beam_certificates_v2(1.0).C1
        below = beam_certificates_v2(1.0 - 1e-12).C1
        target = 16.0 / math.sqrt(3.0)
        assert up == pytest.approx(target, rel=1e-14)
        assert below == pytest.approx(target, rel=1e-9)

    def test_v2_asymptotics(self):
        a = 1e4
        c1 = beam_certificates_v2(a).C1
        assert c1 / (16.0 * a**4 / math.sqrt(3.0)) == pytest.approx(1.0, abs=1e-3)

    def test_v2_c0_printed_formula(self):
        # 2 max(1, (alpha+1)/(e eps alpha)) at alpha = eps = 1/2
        cert = beam_certificates_v2(0.5, 0.5)
        assert cert.C0 == pytest.approx(2.0 * (1.5 / (math.e * 0.25)), rel=1e-14)
        assert cert.C2 is None

    def test_v2_epsilon_domain(self):
        with pytest.raises(ValueError):
            beam_certificates_v2(2.0, 0.0)
        with pytest.raises(ValueError):
            beam_certificates_v2(2.0, 1.0)

    def test_v2_with_c2_attaches_distributed_constant(self):
        hi = beam_v2_with_c2(2.0)
        assert hi.C2 == pytest.approx(beam_c2_tight(2.0).closed_form, rel=1e-12)
        lo = beam_v2_with_c2(0.5)
        assert lo.C2 == pytest.approx(beam_certificates_v1(0.5).C2, rel=1e-12)

    def test_best_c0_scan(self):
        c0, eps = best_v2_c0(2.0)
        grid = [beam_certificates_v2(2.0, e).C0 for e in np.linspace(0.1, 0.9, 9)]
        assert c0 == min(grid)
        assert 0.1 <= eps <= 0.9


class TestCombinedCurve:
    def test_pointwise_minimum_structure(self):
        grid = np.linspace(0.2, 5.0, 241)
        pts = combined_c1_curve(grid)
        for p in pts:
            assert p.C1_min == min(p.C1_v1, p.C1_v2)
            assert math.isfinite(p.C1_min)

    def test_finite_at_one(self):
        (p,) = combined_c1_curve([1.0])
        assert p.C1_v1 == math.inf
        assert p.C1_min == pytest.approx(16.0 / math.sqrt(3.0), abs=1e-9)

    def test_single_point_half(self):
        (p,) = combined_c1_curve([0.5])
        assert p.C1_min == pytest.approx(4.0, rel=1e-14)

    def test_alpha_two_direct_wins(self):
        (p,) = combined_c1_curve([2.0])
        assert p.C1_min == pytest.approx(2.0, rel=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            combined_c1_curve([0.5, -1.0])

    def test_crossover_interval(self):
        lo, hi = v2_advantage_interval()
        # the lower endpoint solves 16 (1 - a^2) = 1 exactly
        assert lo == pytest.approx(math.sqrt(15.0) / 4.0, abs=1e-9)
        assert hi == pytest.approx(1.0172742613, abs=1e-8)
        # strictly inside, the block form wins; outside it loses
        for a, expect in ((lo + 1e-4, True), (hi - 1e-4, True), (lo - 1e-4, False), (hi + 1e-4, False)):
            wins = beam_certificates_v2(a).C1 < beam_certificates_v1(a).C1
            assert wins == expect


class TestDispatchAndValidation:
    def test_dispatch(self, beam_alpha2):
        assert certificate_for_method("thm1", system=beam_alpha2).method == "thm1"
        assert certificate_for_method("beam-v1", alpha=2.0).method == "beam_v1"
        assert certificate_for_method("combined", alpha=2.0).C1 == pytest.approx(2.0)
        at_one = certificate_for_method("combined", alpha=1.0)
        assert at_one.C1 == pytest.approx(16.0 / math.sqrt(3.0))
        assert at_one.C2 is None
        with pytest.raises(ValueError):
            certificate_for_method("nope", alpha=2.0)
        with pytest.raises(ValueError):
            certificate_for_method("thm1")

    def test_certificate_validation(self):
        with pytest.raises(ValueError):
            ISSCertificate(kappa0=-1.0, C0=1.0, C1=1.0, C2=1.0, method="x")
        with pytest.raises(ValueError):
            ISSCertificate(kappa0=1.0, C0=1.0, C1=-1.0, C2=1.0, method="x")
        with pytest.raises(ValueError):
            ISSCertificate(kappa0=1.0, C0=1.0, C1=0.0, C2=1.0, method="x")
        ISSCertificate(kappa0=1.0, C0=1.0, C1=0.0, C2=1.0, method="x", degenerate=True)
        ISSCertificate(kappa0=1.0, C0=1.0, C1=1.0, C2=None, method="x")
