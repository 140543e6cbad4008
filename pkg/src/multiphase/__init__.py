"""Simultaneous estimation of multiple optical phases with N-photon probes."""

from .errors import (
    CapacityError,
    DimensionError,
    FlatLikelihoodError,
    IncompletePovmError,
    NormalizationError,
    SingularFisherError,
    UnsupportedProbeError,
)
from .fisher import (
    BoundReport,
    cfi_matrix,
    classical_bound,
    noon_individual_bound,
    psi_s_bound,
    psi_w_bound,
    qcrb_total_variance,
    qfi_matrix,
    qfi_via_derivatives,
    sld_commutator_expectation,
    trace_inverse,
)
from .fock import (
    ProbeState,
    SparseVector,
    apply_phases,
    derivative_state,
    enumerate_configs,
    inner_product,
)
from .mc import mle_estimate, sample_outcomes
from .povm import (
    PnrdOutcome,
    PovmSet,
    optimal_projectors_for,
    outcome_distribution,
    pnrd_measurement,
    upsilon_projectors,
)
from .probes import (
    MultiportUnitary,
    make_balanced_state,
    make_hb_state,
    make_noon_state,
    make_optimal_state,
    multiport_output,
    optimal_alpha,
    permanent,
)
from .search import optimize_alpha, optimize_cfi_phase, search_optimal_probe

__version__ = "0.1.0"
