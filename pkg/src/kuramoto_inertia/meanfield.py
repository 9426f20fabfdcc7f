"""Kinetic-limit machinery: samplers, gap energies, and desk-scale experiments.

The kinetic equation is solved exclusively through its characteristics: an
atomic initial condition turns the transport PDE into the particle system,
so every experiment here simulates particles and interprets the result as an
empirical measure on T x R.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .analysis import DecayFit, LockClassification, check_large_coupling, classify_lock, fit_decay
from .errors import ValidationError, VariantError
from .integrate import IntegratorConfig, Trajectory, simulate
from .model import ModelParams, ModelVariant, OscillatorEnsemble, comoving_shift
from .observables import diameters, global_order
from .transport import EmpiricalMeasure, wasserstein2


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class ArcUniform:
    """Phases uniform on [center - halfwidth, center + halfwidth], fixed frequency."""

    center: float
    halfwidth: float
    omega_value: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.halfwidth < math.pi):
            raise ValidationError("arc halfwidth must lie in (0, pi)")


@dataclass(frozen=True)
class VonMisesNormal:
    """Product of a von Mises phase marginal and a truncated normal frequency."""

    mu: float
    concentration: float
    omega_sigma: float
    omega_cutoff: float

    def __post_init__(self):
        if self.concentration <= 0.0:
            raise ValidationError("concentration must be positive")
        if self.omega_sigma < 0.0:
            raise ValidationError("omega_sigma must be nonnegative")
        if self.omega_cutoff <= 0.0:
            raise ValidationError("omega_cutoff must be positive")


@dataclass(frozen=True)
class TwoPole:
    """Mass c1 at phi_star and 1 - c1 at phi_star + pi, all at rest."""

    c1: float
    phi_star: float

    def __post_init__(self):
        if not (0.5 < self.c1 <= 1.0):
            raise ValidationError("c1 must lie in (1/2, 1]")


InitialDistribution = Union[ArcUniform, VonMisesNormal, TwoPole]


def sample_initial(dist: InitialDistribution, n: int, seed: int) -> OscillatorEnsemble:
    """Draw an n-oscillator ensemble; deterministic given the seed."""
    if n < 1:
        raise ValidationError("need at least one oscillator")
    rng = np.random.default_rng(seed)
    if isinstance(dist, ArcUniform):
        theta = dist.center + dist.halfwidth * (2.0 * rng.random(n) - 1.0)
        omega = np.full(n, dist.omega_value)
    elif isinstance(dist, VonMisesNormal):
        theta = rng.vonmises(dist.mu, dist.concentration, n)
        omega = rng.normal(0.0, dist.omega_sigma, n) if dist.omega_sigma > 0 else np.zeros(n)
        bad = np.abs(omega) > dist.omega_cutoff
        while np.any(bad):
            omega[bad] = rng.normal(0.0, dist.omega_sigma, int(bad.sum()))
            bad = np.abs(omega) > dist.omega_cutoff
    elif isinstance(dist, TwoPole):
        k = int(round(dist.c1 * n))
        theta = np.concatenate([np.full(k, dist.phi_star),
                                np.full(n - k, dist.phi_star + math.pi)])
        omega = np.zeros(n)
    else:
        raise ValidationError(f"unknown initial distribution {type(dist).__name__}")
    return OscillatorEnsemble(theta=theta, omega=omega)


# ---------------------------------------------------------------------------
# gap energy


@dataclass(frozen=True)
class EpsilonEnergyReport:
    value: float
    epsilon: float
    norm_x_sq: float
    norm_v_sq: float
    inner_xv: float
    c0: float
    c1: float


def epsilon_energy(x: np.ndarray, v: np.ndarray, epsilon: float,
                   m: float, gamma: float) -> EpsilonEnergyReport:
    """E_eps(X, V) = eps*gamma*|X|^2 + 2*m*eps*<X, V> + m*|V|^2.

    c0 and c1 are the exact extreme eigenvalues of the per-pair quadratic
    form [[eps*gamma, m*eps], [m*eps, m]]; they sandwich the energy between
    c0*(|X|^2 + |V|^2) and c1*(|X|^2 + |V|^2), with c0 > 0 whenever
    eps in (0, gamma/m).
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if x.shape != v.shape:
        raise ValidationError("X and V must have equal length")
    nx = float(x @ x)
    nv = float(v @ v)
    xv = float(x @ v)
    value = epsilon * gamma * nx + 2.0 * m * epsilon * xv + m * nv
    half_trace = 0.5 * (epsilon * gamma + m)
    disc = math.sqrt(0.25 * (epsilon * gamma - m) ** 2 + (m * epsilon) ** 2)
    return EpsilonEnergyReport(value=value, epsilon=epsilon, norm_x_sq=nx,
                               norm_v_sq=nv, inner_xv=xv,
                               c0=half_trace - disc, c1=half_trace + disc)


# ---------------------------------------------------------------------------
# two-solution stability experiment


def contraction_coefficient(c_sum: float) -> tuple[float, float]:
    """(as printed, as derived) coupling contraction coefficients for a diameter sum.

    The printed threshold is sin(2s)/s; the two-angle product in its own
    derivation telescopes to sin(s)/s.  Both are reported so hypothesis
    checks can be read either way.
    """
    if c_sum == 0.0:
        return 2.0, 1.0
    return math.sin(2.0 * c_sum) / c_sum, math.sin(c_sum) / c_sum


@dataclass(frozen=True)
class StabilityReport:
    times: np.ndarray
    e_eps: np.ndarray
    epsilon: float
    c1_sum: float
    gamma_tilde: float
    gamma_tilde_corrected: float
    hypothesis_ok: bool
    hypothesis: dict
    c2_constant: float
    max_increase: float
    dissipation_residual_max: float
    d_sum_max: float
    fit: Optional[DecayFit]
    traj_a: Trajectory
    traj_b: Trajectory


def stability_experiment(init_a: OscillatorEnsemble, init_b: OscillatorEnsemble,
                         params: ModelParams, config: IntegratorConfig, *,
                         epsilon: float | None = None,
                         fit_window: tuple | None = None,
                         backend: str = "auto") -> StabilityReport:
    """Co-simulate two centered solutions and track the gap energy E_eps.

    Both initial states are centered via the comoving shift.  The hypothesis
    block records the diameter sum C1(0) + C1~(0) < pi, gamma > 1/2, and
    m*kappa <= gamma_tilde; when it holds, E_eps is guaranteed to dissipate
    at rate c2 = min(2*gamma - 1 - 2*m*eps, kappa*(2*gamma_tilde*eps - kappa))
    per unit squared gap norm.  The experiment runs (and reports) either way.
    """
    if params.variant() is not ModelVariant.HOMOGENEOUS_ALL_TO_ALL:
        raise VariantError("stability experiment needs the homogeneous all-to-all variant")
    if np.any(params.natural_freqs != 0.0):
        raise VariantError("stability experiment assumes zero natural frequencies")
    m = float(params.masses[0])
    gamma = float(params.frictions[0])
    kappa = params.coupling

    init_a = comoving_shift(init_a, params)
    init_b = comoving_shift(init_b, params)
    c1_a = diameters(init_a, params).c1
    c1_b = diameters(init_b, params).c1
    c_sum = c1_a + c1_b
    gamma_tilde, gamma_corr = contraction_coefficient(c_sum)

    eps_lo = kappa / (2.0 * gamma_tilde) if gamma_tilde > 0.0 else math.inf
    eps_hi = (2.0 * gamma - 1.0) / (2.0 * m)
    hypothesis = {
        "c1_sum": c_sum,
        "c1_sum_below_pi": bool(c_sum < math.pi),
        "gamma_above_half": bool(gamma > 0.5),
        "m_kappa": m * kappa,
        "gamma_tilde": gamma_tilde,
        "gamma_tilde_corrected": gamma_corr,
        "m_kappa_within": bool(0.0 < m * kappa <= gamma_tilde),
        "epsilon_window": (eps_lo, eps_hi),
        "epsilon_window_nonempty": bool(eps_lo <= eps_hi),
    }
    hypothesis_ok = (hypothesis["c1_sum_below_pi"]
                     and hypothesis["gamma_above_half"]
                     and hypothesis["m_kappa_within"]
                     and hypothesis["epsilon_window_nonempty"])
    if epsilon is None:
        epsilon = 0.5 * (eps_lo + eps_hi) if hypothesis_ok else gamma / (4.0 * m)

    traj_a = simulate(init_a, params, config, backend=backend)
    traj_b = simulate(init_b, params, config, backend=backend)

    x = traj_a.thetas - traj_b.thetas
    v = traj_a.omegas - traj_b.omegas
    nx = (x * x).sum(axis=1)
    nv = (v * v).sum(axis=1)
    xv = (x * v).sum(axis=1)
    e_eps = epsilon * gamma * nx + 2.0 * m * epsilon * xv + m * nv

    c2 = min(2.0 * gamma - 1.0 - 2.0 * m * epsilon,
             kappa * (2.0 * gamma_tilde * epsilon - kappa))
    dt_samples = np.diff(traj_a.times)
    increments = np.diff(e_eps)
    max_increase = float(increments.max()) if increments.size else 0.0
    resid = increments + c2 * (nx[:-1] + nv[:-1]) * dt_samples
    resid_max = float(resid.max()) if resid.size else 0.0

    d_sums = [
        diameters(traj_a.state(k), params).d_theta
        + diameters(traj_b.state(k), params).d_theta
        for k in range(len(traj_a))
    ]
    d_sum_max = float(np.max(d_sums))

    if fit_window is None:
        fit_window = (min(1.0, 0.5 * config.t_final), config.t_final)
    mask = (traj_a.times >= fit_window[0]) & (traj_a.times <= fit_window[1])
    fit = None
    if int(mask.sum()) >= 2 and np.all(e_eps[mask] > 0.0):
        fit = fit_decay(traj_a.times, e_eps, fit_window)

    return StabilityReport(
        times=traj_a.times, e_eps=e_eps, epsilon=float(epsilon),
        c1_sum=c_sum, gamma_tilde=gamma_tilde, gamma_tilde_corrected=gamma_corr,
        hypothesis_ok=bool(hypothesis_ok), hypothesis=hypothesis,
        c2_constant=c2, max_increase=max_increase,
        dissipation_residual_max=resid_max, d_sum_max=d_sum_max,
        fit=fit, traj_a=traj_a, traj_b=traj_b,
    )


# ---------------------------------------------------------------------------
# mean-field convergence experiment


def _homogeneous_scalars(params: ModelParams) -> tuple[float, float, float]:
    if params.variant() is not ModelVariant.HOMOGENEOUS_ALL_TO_ALL:
        raise VariantError("kinetic experiments need the homogeneous all-to-all variant")
    if np.any(params.natural_freqs != 0.0):
        raise VariantError("kinetic experiments assume zero natural frequencies")
    return float(params.masses[0]), float(params.frictions[0]), params.coupling


def _prefix(ensemble: OscillatorEnsemble, n: int) -> OscillatorEnsemble:
    return OscillatorEnsemble(theta=ensemble.theta[:n], omega=ensemble.omega[:n])


def _convergence_seed_run(args) -> list[dict]:
    (dist, n_list, n_ref, m, gamma, kappa, config, seed,
     exact_cap, n_projections) = args
    ref_ensemble = sample_initial(dist, n_ref, seed)
    ref_params = ModelParams.all_to_all(n_ref, mass=m, friction=gamma, coupling=kappa)
    ref_traj = simulate(ref_ensemble, ref_params, config)
    rows = []
    for n in n_list:
        sub_params = ModelParams.all_to_all(n, mass=m, friction=gamma, coupling=kappa)
        traj = simulate(_prefix(ref_ensemble, n), sub_params, config)
        sup = 0.0
        method = "exact"
        for k in range(len(traj)):
            res = wasserstein2(
                EmpiricalMeasure(traj.thetas[k], traj.omegas[k]),
                EmpiricalMeasure(ref_traj.thetas[k], ref_traj.omegas[k]),
                exact_cap=exact_cap, n_projections=n_projections,
                seed=seed * 100003 + k,
            )
            if res.value > sup:
                sup = res.value
            method = res.method
        rows.append({"seed": seed, "n": n, "sup_w2": sup, "method": method})
    return rows


@dataclass(frozen=True)
class ConvergenceReport:
    rows: list
    medians: dict
    hypothesis: dict


def meanfield_convergence_experiment(dist: InitialDistribution, n_list, n_ref: int,
                                     params: ModelParams, config: IntegratorConfig,
                                     seeds, *, workers: int = 1,
                                     exact_cap: int = 512,
                                     n_projections: int = 256) -> ConvergenceReport:
    """Gap between nested N-particle and reference empirical measures over time.

    For each seed the N-atom initial sample is the prefix of the reference
    sample, so the initial W2 gap shrinks stochastically with N.  Reports
    sup-over-sampled-times W2 per (seed, N) plus medians per N; decrease in
    N is reported, never asserted.
    """
    m, gamma, kappa = _homogeneous_scalars(params)
    if any(n > n_ref for n in n_list):
        raise ValidationError("every N in n_list must be at most N_ref")

    probe = sample_initial(dist, n_ref, int(seeds[0]))
    probe_params = ModelParams.all_to_all(n_ref, mass=m, friction=gamma, coupling=kappa)
    dia = diameters(probe, probe_params)
    c1 = dia.c1
    hypothesis = {
        "c1": c1,
        "c1_in_range": bool(0.0 < c1 < 0.5 * math.pi),
        "m_kappa": m * kappa,
        "mk_bound_printed": math.sin(4.0 * c1) / (2.0 * c1) if c1 > 0 else math.nan,
        "mk_bound_corrected": math.sin(2.0 * c1) / (2.0 * c1) if c1 > 0 else math.nan,
        "omega_support_radius": float(np.abs(probe.omega).max()),
    }
    hypothesis["mk_within_printed"] = bool(
        0.0 < m * kappa <= hypothesis["mk_bound_printed"])
    hypothesis["mk_within_corrected"] = bool(
        0.0 < m * kappa <= hypothesis["mk_bound_corrected"])

    jobs = [(dist, tuple(n_list), n_ref, m, gamma, kappa, config, int(seed),
             exact_cap, n_projections) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_convergence_seed_run, jobs))
    else:
        results = [_convergence_seed_run(job) for job in jobs]
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda r: (r["seed"], r["n"]))

    medians = {
        n: float(np.median([r["sup_w2"] for r in rows if r["n"] == n]))
        for n in n_list
    }
    return ConvergenceReport(rows=rows, medians=medians, hypothesis=hypothesis)


# ---------------------------------------------------------------------------
# moments, support, and the kinetic synchronization experiment


def propagation_of_averages(f_in_moments: tuple, m: float, gamma: float, t):
    """First moments of the kinetic solution from the initial moments.

    mean_theta(t) = mean_theta + m (1 - exp(-gamma t / m)) mean_omega
    mean_omega(t) = exp(-gamma t / m) mean_omega
    """
    mean_theta, mean_omega = f_in_moments
    decay = np.exp(-gamma * np.asarray(t, dtype=np.float64) / m)
    theta_t = mean_theta + m * (1.0 - decay) * mean_omega
    omega_t = decay * mean_omega
    if np.ndim(t) == 0:
        return float(theta_t), float(omega_t)
    return theta_t, omega_t


def support_bound(omega_max: float, m: float, kappa: float, t: float | None = None) -> float:
    """Frequency-support envelope max(omega_max, m*kappa); uniform in t.

    This is the printed kinetic-support bound.  The per-oscillator friction
    bound (see observables.frequency_bound) gives max(omega_max, kappa/gamma)
    instead; monitor both when auditing trajectories.
    """
    return max(float(omega_max), m * kappa)


def empirical_energies(state: OscillatorEnsemble, m: float, gamma: float,
                       kappa: float) -> tuple[float, float]:
    """Kinetic and interaction energy of the empirical measure.

    E_K = (1/2) mean(omega^2);  E_P = (kappa / 2m) (1 - R^2), which equals
    the double integral of (1 - cos) against the product measure.  Along
    particle solutions d/dt (E_K + E_P) = -(2 gamma / m) E_K.
    """
    e_k = 0.5 * float(np.mean(state.omega ** 2))
    r = global_order(state.theta).r
    e_p = 0.5 * kappa / m * (1.0 - r * r)
    return e_k, e_p


@dataclass(frozen=True)
class KineticSyncReport:
    times: np.ndarray
    e_kinetic: np.ndarray
    e_potential: np.ndarray
    r_trace: np.ndarray
    condition: object
    classification: LockClassification
    c1c2: Optional[tuple]


def kinetic_sync_experiment(dist: InitialDistribution, n: int, params: ModelParams,
                            config: IntegratorConfig, *, seed: int = 0,
                            tol_angle: float = 1e-3,
                            backend: str = "auto") -> KineticSyncReport:
    """Particle proxy for the kinetic relaxation toward a bi-polar state.

    Checks the particle form of the kinetic-energy condition, tracks the
    empirical energies and the order parameter, and classifies the final
    empirical measure; (c1, c2) = (k/N, 1 - k/N) when a two-pole structure
    is found.
    """
    m, gamma, kappa = _homogeneous_scalars(params)
    ensemble = sample_initial(dist, n, seed)
    run_params = ModelParams.all_to_all(n, mass=m, friction=gamma, coupling=kappa)
    condition = check_large_coupling(ensemble, run_params)
    traj = simulate(ensemble, run_params, config, backend=backend)

    e_k = np.empty(len(traj))
    e_p = np.empty(len(traj))
    r_trace = np.empty(len(traj))
    for k in range(len(traj)):
        e_k[k], e_p[k] = empirical_energies(traj.state(k), m, gamma, kappa)
        r_trace[k] = global_order(traj.thetas[k]).r

    classification = classify_lock(traj.thetas[-1], tol_angle=tol_angle)
    c1c2 = None
    if classification.kind.value in ("one_point_cluster", "bipolar"):
        c1c2 = (classification.k / n, (n - classification.k) / n)
    return KineticSyncReport(times=traj.times, e_kinetic=e_k, e_potential=e_p,
                             r_trace=r_trace, condition=condition,
                             classification=classification, c1c2=c1c2)
