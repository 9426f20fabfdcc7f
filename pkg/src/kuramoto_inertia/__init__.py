"""Simulation and analysis toolkit for inertial Kuramoto oscillators.

Second-order phase oscillators m_i theta'' = -gamma_i theta' + nu_i
+ kappa sum_j a_ij sin(theta_j - theta_i) on symmetric networks: fixed-step
integration, order parameters and energies, synchronization-condition
checkers, and empirical-measure experiments under the Wasserstein-2 metric.
"""

from ._backend import COMPILED_AVAILABLE
from .analysis import (
    ConditionVerdict,
    DecayFit,
    LockClassification,
    LockKind,
    check_diameter_condition,
    check_large_coupling,
    check_near_uniform,
    classify_lock,
    coherence_lower_bounds,
    detect_sync,
    fit_decay,
    gronwall_envelope,
    solve_sine_threshold,
)
from .errors import (
    ConfigError,
    DimensionError,
    InsufficientMarginError,
    SimulationError,
    ValidationError,
    VariantError,
)
from .integrate import IntegratorConfig, Scheme, Trajectory, mean_closed_form, simulate, step
from .meanfield import (
    ArcUniform,
    ConvergenceReport,
    EpsilonEnergyReport,
    InitialDistribution,
    KineticSyncReport,
    StabilityReport,
    TwoPole,
    VonMisesNormal,
    empirical_energies,
    epsilon_energy,
    kinetic_sync_experiment,
    meanfield_convergence_experiment,
    propagation_of_averages,
    sample_initial,
    stability_experiment,
    support_bound,
)
from .model import (
    ModelParams,
    ModelVariant,
    OscillatorEnsemble,
    StateDerivative,
    comoving_shift,
    coupling_sum,
    equilibrium_residual,
    grad_potential,
    potential,
    rhs,
)
from .observables import (
    DiameterReport,
    EnergyReport,
    GlobalOrder,
    LocalOrder,
    OrderParams,
    cosine_sum_identity,
    diameters,
    energies,
    freq_functional,
    freq_functional_order_form,
    frequency_bound,
    global_order,
    interaction_energy,
    local_order,
    weighted_averages,
)
from .transport import EmpiricalMeasure, W2Result, circle_distance, wasserstein2

__version__ = "0.1.0"
