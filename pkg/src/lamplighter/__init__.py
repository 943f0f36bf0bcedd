"""Stationary switch-walk-switch random walks on lamplighter groups and graphs.

The walk refreshes the lamp where it stands, moves in the base with a drift
toward the root, and refreshes the lamp where it lands.  The package pairs a
reference simulator and a vectorized engine with the closed-form layer for
return probabilities, local times, and the recurrence-transience phase
transition, and cross-validates the two at every seam.
"""

from .dynamics import (
    BiasedZWalk,
    ExcursionStats,
    HomesickGraphWalk,
    LocalTimeResult,
    WalkerState,
    initial_state,
    local_time_run,
    run_excursion,
    simulate_returns,
    ssw_step,
    switch_count_local_times,
)
from .errors import ConfigError, StepBudgetError, TruncationError
from .exact import (
    PhaseParams,
    escape_prob_bound,
    excursion_series,
    local_time_partial_sum,
    max_excursion_cdf,
    mgf_rho1,
    phase_params,
    range_lower_tail_bound,
    ret_prob_at_rho_k,
    ret_prob_given_extremes,
    ret_prob_given_local_times,
    ret_prob_given_nplus,
    rho1_pmf,
)
from .graphs import (
    BiasParams,
    HomesickParams,
    RootedGraph,
    biased_step_distribution,
    build_gamma_m,
    build_line_graph,
    homesick_transition,
    load_edge_list,
    load_edge_list_file,
)
from .lamps import (
    LampGroup,
    SwitchMeasure,
    convolution_power,
    convolution_power_at_identity,
    cyclic_group,
    integer_group,
    make_uniform_measure,
    sample_switch,
)
from .montecarlo import (
    EstimateWithCI,
    PhaseScanResult,
    WalkConfig,
    empirical_cdf_distance,
    estimate_local_time,
    estimate_return_prob,
    fit_power_exponent,
    ks_critical_value,
    phase_scan,
    sample_excursion_maxima,
)
from .streams import stream_rng

__version__ = "0.1.0"
