"""Numerics for classical communication over small quantum channels with a
limited entanglement budget: channel constructions, capacity optimizers,
trade-off curves and a verification harness."""

from .qstate import (
    DensityMatrix,
    SubsystemShape,
    basis_state,
    binary_entropy,
    make_density,
    maximally_mixed,
    partial_trace,
    pure_state,
    purify,
    symmetric_noise_entropy,
    von_neumann_entropy,
)
from .channels import (
    Channel,
    FlaggedSpec,
    apply,
    apply_extended,
    classical_symmetric,
    covariant_extend,
    dephasing,
    flagged,
    heisenberg_weyl,
    identity_channel,
    is_classical,
    n0_embedding,
    random_channel,
    tensor,
    tensor_power,
)
from .functionals import (
    Ensemble,
    avg_input_entropy,
    chi_assist,
    ensemble_from_pure,
    ensemble_from_purification_vectors,
    entropy_gain,
    holevo_chi,
    min_output_entropy,
)
from .optimizers import (
    CapacityResult,
    DimensionCapError,
    OptimizerConfig,
    assisted_tensor_classical_quantum,
    c1,
    c1_assisted,
    c1_assisted_covariant,
    classical_capacity,
    n_shot,
)
from .tradeoff import (
    CurveAnalysis,
    TradeoffCurve,
    analyze,
    injected_gap_model,
    sample_curve,
    timeshare_flagged,
    witness_superadditivity,
)
from .verify import (
    VerificationReport,
    check_covariant_capacity,
    check_lemma_cq,
    check_lemma_flagged_c1,
    check_lemma_flagged_cp,
    check_tensor_additivity,
    check_twirl,
)

__version__ = "0.1.0"
