"""Device-independent quantum state verification and certification.

Plan, simulate, and validate finite-sample verification/certification
protocols built on nonlocal games: exact few-qubit linear algebra, the
Mermin (GHZ) and CHSH games with their robustness constants, KL-divergence
tail bounds and sample-size planners, correlated source models with
Bayesian conditional states, and exact dynamic-programming oracles that
check every bound.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bounds import (
    BoundReport,
    allpass_sample_size,
    bound_report,
    certificate_success_floor,
    certification_sample_size,
    certification_tail_bound,
    dd_sample_size,
    extractability_success_map,
    kl_divergence,
    mgf_bound_raw,
    optimal_t,
    pass_threshold,
    taylor_sample_size,
    verification_sample_size,
    verification_tail_bound,
)
from .experiments import (
    FigureSpec,
    McResult,
    OracleResult,
    default_figure_spec,
    exact_certification_pass_probability,
    exact_pass_probability,
    figure_dataset,
    mc_pass_estimate,
)
from .games import (
    NonlocalGame,
    QuantumStrategy,
    RobustnessModel,
    RoundRecord,
    bell_value,
    classical_optimum,
    optimal_strategy,
    sample_round,
    score_round,
    standard_game,
    win_probability,
)
from .linalg import (
    BinaryMeasurement,
    DensityOperator,
    StateVector,
    bell_state,
    born_probabilities,
    depolarize,
    fidelity_with_pure,
    ghz_state,
    maximally_mixed,
    partial_trace,
    plus_state,
    spectral_gap,
    standard_state,
    tensor_product,
    trace_distance,
)
from .protocols import (
    CertificationPlan,
    Transcript,
    Verdict,
    VerificationPlan,
    plan_certification,
    plan_verification,
    run_certification,
    run_verification,
)
from .sources import (
    SourceModel,
    SourceState,
    bernoulli_source,
    branch_average_success,
    conditional_round,
    conditional_win_probability,
    iid_source,
    independent_source,
    initial_state,
    mixture_source,
    source_from_spec,
    source_from_string,
)

__version__ = "0.1.0"
