"""Error-mitigation cost of non-Markovian time-local dynamics.

Time-local master equations with possibly negative decay rates, their canonical
form, non-Markovianity measures, the quasiprobability sampling cost they imply,
a Monte Carlo mitigation sampler, and two worked dephasing models.
"""

from .canonical import (
    CanonicalDecomposition,
    ProcessMatrix,
    RateTrace,
    build_process_matrix,
    canonical_rates,
    canonical_series,
    extract_dephasing_rates,
    is_cp_divisible,
    track_canonical_rates,
)
from .dynamics import Channel, StateTrajectory, TimeGrid, TimeLocalGenerator, default_steps, evolve, master_rhs
from .errors import DivergenceError, IntegrationError, PreconditionError, RateBoundError, TruncationError
from .measures import (
    MeasureReport,
    cost_identity_check,
    cumulative_measures,
    decay_rate_measure,
    markovian_bound,
    qem_cost_general,
    qem_cost_unital,
    rhp_witness,
)
from .models import (
    ConstantDephasing,
    DephasingModel,
    DispersiveDephasing,
    DispersiveModelParams,
    NmrDephasing,
    NmrModelParams,
    dispersive_coherence,
    dispersive_full_oracle,
    dispersive_rates,
    dispersive_rates_exact,
    nmr_f,
    nmr_full_oracle,
    nmr_lambda_pm,
    nmr_rates,
)
from .operators import BasisSet, DensityMatrix, hermitian_eigendecompose, partial_trace, pauli_basis, trace_norm
from .sampler import (
    MitigatedEstimate,
    RecoveryOperation,
    dephasing_recovery,
    ideal_expectation,
    run_mitigated_estimate,
    sample_jump_times,
)

__all__ = [name for name in dir() if not name.startswith("_")]
