"""Scalar and vector observables of an oscillator ensemble.

Order parameters follow the complex mean-field convention

    R e^{i phi}       = (1/N) sum_j e^{i theta_j}          (global)
    R_i e^{i phi_i}   = sum_j a_ij e^{i theta_j}           (local, per oscillator)

with phi reported as 0 and a degenerate flag set whenever the modulus falls
below ``eps`` (the argument is undefined there).  Angle differences feeding
sin/cos are used raw; only reported reference phases are meaningful mod 2pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .model import ModelParams, ModelVariant, OscillatorEnsemble, coupling_sum

DEGENERATE_EPS = 1e-8


@dataclass(frozen=True)
class GlobalOrder:
    r: float
    phi: float
    degenerate: bool


@dataclass(frozen=True)
class LocalOrder:
    r: np.ndarray
    phi: np.ndarray
    degenerate: np.ndarray


@dataclass(frozen=True)
class OrderParams:
    """Global and local order parameters of one phase configuration."""

    r: float
    phi: float
    degenerate: bool
    r_local: np.ndarray
    phi_local: np.ndarray
    degenerate_local: np.ndarray

    @classmethod
    def compute(cls, theta: np.ndarray, capacity: np.ndarray,
                eps: float = DEGENERATE_EPS) -> "OrderParams":
        g = global_order(theta, eps=eps)
        loc = local_order(theta, capacity, eps=eps)
        return cls(r=g.r, phi=g.phi, degenerate=g.degenerate,
                   r_local=loc.r, phi_local=loc.phi,
                   degenerate_local=loc.degenerate)


def global_order(theta: np.ndarray, eps: float = DEGENERATE_EPS) -> GlobalOrder:
    """Modulus and argument of the mean unit phasor."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size < 1:
        raise ValidationError("need at least one phase")
    z = np.exp(1j * theta).mean()
    r = float(np.abs(z))
    if r < eps:
        return GlobalOrder(r=r, phi=0.0, degenerate=True)
    return GlobalOrder(r=r, phi=float(np.angle(z)), degenerate=False)


def local_order(theta: np.ndarray, capacity: np.ndarray,
                eps: float = DEGENERATE_EPS) -> LocalOrder:
    """Per-oscillator capacity-weighted order parameters."""
    theta = np.asarray(theta, dtype=np.float64)
    capacity = np.asarray(capacity, dtype=np.float64)
    if capacity.shape != (theta.size, theta.size):
        raise DimensionError("capacity shape does not match phase count")
    z = capacity @ np.exp(1j * theta)
    r = np.abs(z)
    degenerate = r < eps
    phi = np.where(degenerate, 0.0, np.angle(z))
    return LocalOrder(r=r, phi=phi, degenerate=degenerate)


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    variant: ModelVariant


def interaction_energy(theta: np.ndarray, params: ModelParams) -> float:
    """(kappa/2) sum_ij a_ij (1 - cos(theta_i - theta_j)), any network."""
    theta = np.asarray(theta, dtype=np.float64)
    diffs = theta[:, np.newaxis] - theta[np.newaxis, :]
    return float(0.5 * params.coupling * (params.capacity * (1.0 - np.cos(diffs))).sum())


def energies(state: OscillatorEnsemble, params: ModelParams) -> EnergyReport:
    """Kinetic and interaction energy of the state.

    Homogeneous all-to-all ensembles use the order-parameter shortcut
    E_P = (kappa N / 2)(1 - R^2), which equals the capacity double sum; the
    general network keeps the double sum with per-oscillator masses.
    """
    if state.n != params.n:
        raise DimensionError("state and params disagree on oscillator count")
    variant = params.variant()
    if variant is ModelVariant.HOMOGENEOUS_ALL_TO_ALL:
        m = float(params.masses[0])
        kinetic = 0.5 * m * float(state.omega @ state.omega)
        r = global_order(state.theta).r
        pot = 0.5 * params.coupling * state.n * (1.0 - r * r)
    else:
        kinetic = 0.5 * float(params.masses @ (state.omega ** 2))
        pot = interaction_energy(state.theta, params)
    return EnergyReport(kinetic=kinetic, potential=pot,
                        total=kinetic + pot, variant=variant)


@dataclass(frozen=True)
class DiameterReport:
    d_theta: float
    d_omega: float
    d_dot: float
    c1: float
    c2: float
    d_nu: float
    max_tied: bool


def diameters(state: OscillatorEnsemble, params: ModelParams) -> DiameterReport:
    """Phase/frequency diameters and the inertia-weighted quantities C_1, C_2.

    d_dot is the frequency at the extremal phases (argmax minus argmin,
    first index on ties; ties set the max_tied flag), and
    C_l = max(D, D + l m d_dot) with m the largest mass.
    """
    theta, omega = state.theta, state.omega
    i_max = int(np.argmax(theta))
    i_min = int(np.argmin(theta))
    d_theta = float(theta[i_max] - theta[i_min])
    d_dot = float(omega[i_max] - omega[i_min])
    tied = bool(np.sum(theta == theta[i_max]) > 1 or np.sum(theta == theta[i_min]) > 1)
    m = float(np.max(params.masses))
    c1 = max(d_theta, d_theta + m * d_dot)
    c2 = max(d_theta, d_theta + 2.0 * m * d_dot)
    return DiameterReport(
        d_theta=d_theta,
        d_omega=float(np.max(omega) - np.min(omega)),
        d_dot=d_dot,
        c1=c1,
        c2=c2,
        d_nu=float(np.max(params.natural_freqs) - np.min(params.natural_freqs)),
        max_tied=tied,
    )


def freq_functional(state: OscillatorEnsemble, params: ModelParams) -> float:
    """F = (1/2) sum_i |gamma_i omega_i - kappa sum_j a_ij sin(theta_j - theta_i)|^2.

    The coupling-sum form is used because it stays defined when the order
    parameter degenerates; it equals the order-parameter form
    (1/2) sum |gamma_i omega_i + kappa R_i sin(theta_i - phi_i)|^2 identically,
    and also (1/2) sum (m_i domega_i)^2 along solutions.
    """
    residual = params.frictions * state.omega - coupling_sum(state.theta, params)
    return 0.5 * float(residual @ residual)


def freq_functional_order_form(state: OscillatorEnsemble, params: ModelParams) -> float:
    """Order-parameter form of the frequency functional (degenerate R -> coupling form)."""
    loc = local_order(state.theta, params.capacity)
    term = params.coupling * loc.r * np.sin(state.theta - loc.phi)
    term = np.where(loc.degenerate, -coupling_sum(state.theta, params), term)
    residual = params.frictions * state.omega + term
    return 0.5 * float(residual @ residual)


def cosine_sum_identity(theta: np.ndarray) -> tuple[float, float]:
    """Both sides of sum_ij cos(theta_i - theta_j) = (N R)^2."""
    theta = np.asarray(theta, dtype=np.float64)
    diffs = theta[:, np.newaxis] - theta[np.newaxis, :]
    lhs = float(np.cos(diffs).sum())
    r = global_order(theta).r
    rhs = (theta.size * r) ** 2
    return lhs, rhs


def weighted_averages(state: OscillatorEnsemble, params: ModelParams) -> tuple[float, float]:
    """Friction-weighted phase mean and mass-weighted frequency mean.

    Along any solution d/dt (omega_s + theta_s) = nu_c, so omega_s + theta_s
    is conserved when the natural frequencies sum to zero.
    """
    theta_s = float(params.frictions @ state.theta) / state.n
    omega_s = float(params.masses @ state.omega) / state.n
    return theta_s, omega_s


@dataclass(frozen=True)
class TrajectoryObservables:
    """Per-sample observable columns of a trajectory (vectorized over samples)."""

    r_p: np.ndarray
    phi_p: np.ndarray
    e_kinetic: np.ndarray
    e_potential: np.ndarray
    d_theta: np.ndarray
    d_omega: np.ndarray
    f: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return {
            "R_p": self.r_p, "E_K": self.e_kinetic, "E_P": self.e_potential,
            "D_theta": self.d_theta, "D_omega": self.d_omega, "F": self.f,
        }[name]


def trajectory_observables(traj) -> TrajectoryObservables:
    """Order parameter, energies, diameters, and F at every sample of a trajectory.

    All-to-all homogeneous networks use the O(N) order-parameter reductions;
    general networks go through the capacity matrix.
    """
    params = traj.params
    thetas, omegas = traj.thetas, traj.omegas
    z = np.exp(1j * thetas)
    zmean = z.mean(axis=1)
    r = np.abs(zmean)
    phi = np.where(r < DEGENERATE_EPS, 0.0, np.angle(zmean))
    if params.variant() is ModelVariant.HOMOGENEOUS_ALL_TO_ALL:
        m = float(params.masses[0])
        e_k = 0.5 * m * (omegas ** 2).sum(axis=1)
        e_p = 0.5 * params.coupling * params.n * (1.0 - r * r)
        force = params.coupling * np.imag(np.conj(z) * zmean[:, np.newaxis])
    else:
        e_k = 0.5 * (omegas ** 2) @ params.masses
        w = z @ params.capacity
        cos_sum = np.einsum("sk,sk->s", np.conj(z), w).real
        e_p = 0.5 * params.coupling * (params.capacity.sum() - cos_sum)
        force = params.coupling * np.imag(np.conj(z) * w)
    residual = params.frictions * omegas - force
    return TrajectoryObservables(
        r_p=r,
        phi_p=phi,
        e_kinetic=e_k,
        e_potential=e_p,
        d_theta=thetas.max(axis=1) - thetas.min(axis=1),
        d_omega=omegas.max(axis=1) - omegas.min(axis=1),
        f=0.5 * (residual ** 2).sum(axis=1),
    )


def frequency_bound(init: OscillatorEnsemble, params: ModelParams) -> np.ndarray:
    """Per-oscillator a priori bound max(( |nu_i| + kappa sum_j a_ij )/gamma_i, |omega_i(0)|).

    Every solution satisfies |omega_i(t)| <= this bound for all t >= 0.
    """
    drive = (np.abs(params.natural_freqs)
             + params.coupling * params.capacity.sum(axis=1)) / params.frictions
    return np.maximum(drive, np.abs(init.omega))
