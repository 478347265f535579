"""Finite-memory interacting Polya urn contagion networks.

Three cross-validating routes to the same process: exact Markov-chain
computation on the expanded draw space, Monte Carlo simulation with
exact integer ball counts, and mean-field dynamical systems (nonlinear
and linearized) with equilibrium analysis.
"""

from .chain import (
    KernelStructure,
    TransitionKernel,
    build_kernel,
    check_irreducible_aperiodic,
    evolve_distribution,
    marginal_infection,
    point_mass,
    stationary_distribution,
    transition_prob,
    two_fold_joint,
)
from .errors import (
    CapExceededError,
    ConfigError,
    ConvergenceError,
    UnstableSystemError,
)
from .meanfield import (
    Equilibrium,
    InfectionTrajectory,
    LinearSystem,
    build_linear_system,
    configuration_weights,
    enumerate_lag_subsets,
    equilibrium,
    iterate,
    spectral_radius,
    step_direct,
    step_nonlinear,
)
from .montecarlo import (
    ReplicateSummary,
    SimState,
    Trajectory,
    average_replicates,
    empirical_sum,
    new_state,
    replicate_stream,
    simulate,
    step,
)
from .networks import (
    barabasi_albert,
    complete,
    identity,
    ring,
    row_normalize,
)
from .params import (
    NetworkParams,
    RawConfig,
    check_interaction_matrix,
    clamp_probability,
    draw_probability,
    normalize,
    red_ratio,
    red_ratio_from_count,
    red_ratio_table,
)

__version__ = "0.1.0"
