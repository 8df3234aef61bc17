"""Bell functionals, wired monogamy relations, and the dynamical swap-protocol Bell test."""

__version__ = "0.1.0"

from .bellcore import (
    Behavior,
    BellFunctional,
    CorrelatorFunctional,
    DeterministicStrategy,
    QuantumStrategy,
    Scenario,
    bell_operator,
    chsh,
    classical_bound,
    correlator_to_probability_form,
    evaluate_functional,
    game_win_probability,
    no_signaling_bound,
    quantum_behavior,
)
from .monogamy import (
    MonogamyRelation,
    tripartite_wired_chsh,
    verify_monogamy,
    wire_m_of_n,
    wire_pairwise,
)
from .protocol import (
    ProtocolSpec,
    critical_visibility,
    default_measurements,
    dispatch_state,
    epr_state,
    exact_bell_value,
    exact_correlators,
    optimize_protocol_measurements,
    swap_operator,
    theta_threshold_scan,
)
from .qlinalg import DensityMatrix, Observable
from .sampler import (
    TrialRecord,
    accumulate_counts,
    estimate_bell_value,
    estimate_correlators,
    p_value,
    sample_trials,
    simulate_counts,
)
from .seesaw import seesaw
from .tables import CorrelatorTable, CountsTable
from .tomography import (
    TomographyCounts,
    VisibilityCurve,
    fidelity_to_bell_state,
    reconstruct_density,
    synthesize_tomography_counts,
    visibility_curve,
)
