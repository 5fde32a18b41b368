"""Modal simulation and ISS certification of Riesz-spectral boundary control systems."""

from .spectral import (
    ConstraintVerdict,
    RelaxedSums,
    RieszBounds,
    Spectrum,
    constraint_verdict,
    growth_bound,
    parabolicity_ratio,
    relaxed_constraint_sum,
)
from .system import (
    GramData,
    ModalProjection,
    StateCoefficients,
    SystemDefinition,
    UnsupportedOperationError,
    biorthogonality_check,
    load_system,
    save_system,
    state_norm,
    state_norms,
    stationary_coeffs,
    stationary_energies,
)
from .beam import beam_system
from .certificates import (
    CertificateUnavailableError,
    CurvePoint,
    ISSCertificate,
    beam_c2_tight,
    beam_certificates_v1,
    beam_certificates_v2,
    beam_v2_with_c2,
    certificate_for_method,
    certificate_relaxed,
    certificate_thm1,
    certificate_thm2,
    combined_c1_curve,
    v2_advantage_interval,
)
from .simulate import (
    BlockMatrix2,
    DisturbanceSignal,
    Trajectory,
    block_exponential,
    integrate_beam_blocks,
    integrate_modes,
    mild_solution,
    mild_solution_path,
    write_trajectory_csv,
    zero_disturbance,
)
from .verify import (
    ApproximationRun,
    ConvergenceFailureError,
    VerificationReport,
    WeakSolutionResult,
    compatible_initial_state,
    make_distributed,
    make_disturbance,
    mollify,
    random_state,
    run_campaign,
    verify_fading_memory,
    verify_iss,
    verify_trajectory,
    weak_solution_by_approximation,
    with_distributed,
)

__all__ = [
    "ApproximationRun",
    "BlockMatrix2",
    "CertificateUnavailableError",
    "ConstraintVerdict",
    "ConvergenceFailureError",
    "CurvePoint",
    "DisturbanceSignal",
    "GramData",
    "ISSCertificate",
    "ModalProjection",
    "RelaxedSums",
    "RieszBounds",
    "Spectrum",
    "StateCoefficients",
    "SystemDefinition",
    "Trajectory",
    "UnsupportedOperationError",
    "VerificationReport",
    "WeakSolutionResult",
    "beam_c2_tight",
    "beam_certificates_v1",
    "beam_certificates_v2",
    "beam_system",
    "beam_v2_with_c2",
    "biorthogonality_check",
    "block_exponential",
    "certificate_for_method",
    "certificate_relaxed",
    "certificate_thm1",
    "certificate_thm2",
    "combined_c1_curve",
    "compatible_initial_state",
    "constraint_verdict",
    "growth_bound",
    "integrate_beam_blocks",
    "integrate_modes",
    "load_system",
    "make_distributed",
    "make_disturbance",
    "mild_solution",
    "mild_solution_path",
    "mollify",
    "parabolicity_ratio",
    "random_state",
    "relaxed_constraint_sum",
    "run_campaign",
    "save_system",
    "state_norm",
    "state_norms",
    "stationary_coeffs",
    "stationary_energies",
    "v2_advantage_interval",
    "verify_fading_memory",
    "verify_iss",
    "verify_trajectory",
    "weak_solution_by_approximation",
    "with_distributed",
    "write_trajectory_csv",
    "zero_disturbance",
]
