"""State, parameters, and right-hand side of the inertial Kuramoto system.

N phase oscillators with inertia on a symmetric network obey

    m_i theta_i'' = -gamma_i theta_i' + nu_i + kappa sum_j a_ij sin(theta_j - theta_i)

handled everywhere as the first-order system on phase-frequency space

    theta_i' = omega_i
    omega_i' = (-gamma_i omega_i + nu_i + kappa sum_j a_ij sin(theta_j - theta_i)) / m_i

Phases are kept on the real line, never wrapped; observables that need circle
geometry wrap internally.  The all-to-all network uses a_ij = 1/N including
the diagonal (the self term contributes sin(0) = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, ValidationError, VariantError


def _as_readonly_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if arr.size < 1:
        raise ValidationError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains nonfinite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OscillatorEnsemble:
    """Phases and frequencies of N oscillators (immutable value object)."""

    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        theta = _as_readonly_vector(self.theta, "theta")
        omega = _as_readonly_vector(self.omega, "omega")
        if theta.size != omega.size:
            raise DimensionError(
                f"theta has {theta.size} entries but omega has {omega.size}"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)

    @property
    def n(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative (theta', omega') matching an ensemble's layout."""

    dtheta: np.ndarray
    domega: np.ndarray


class ModelVariant(Enum):
    HOMOGENEOUS_ALL_TO_ALL = "homogeneous_all_to_all"
    HETEROGENEOUS_NETWORK = "heterogeneous_network"


@dataclass(frozen=True)
class ModelParams:
    """Per-oscillator masses/frictions/natural frequencies plus the network.

    Invariants enforced on construction: m_i > 0, gamma_i > 0, kappa >= 0,
    and the capacity matrix is symmetric (exact equality as stored) with
    nonnegative entries.
    """

    masses: np.ndarray
    frictions: np.ndarray
    natural_freqs: np.ndarray
    coupling: float
    capacity: np.ndarray

    def __post_init__(self):
        masses = _as_readonly_vector(self.masses, "masses")
        frictions = _as_readonly_vector(self.frictions, "frictions")
        nus = _as_readonly_vector(self.natural_freqs, "natural_freqs")
        n = masses.size
        if frictions.size != n or nus.size != n:
            raise DimensionError("masses, frictions, natural_freqs must share length")
        if np.any(masses <= 0.0):
            raise ValidationError("all masses must be positive")
        if np.any(frictions <= 0.0):
            raise ValidationError("all frictions must be positive")
        kappa = float(self.coupling)
        if not np.isfinite(kappa) or kappa < 0.0:
            raise ValidationError("coupling must be finite and nonnegative")
        cap = np.array(self.capacity, dtype=np.float64, copy=True)
        if cap.shape != (n, n):
            raise DimensionError(
                f"capacity must be {n}x{n}, got {cap.shape}"
            )
        if not np.all(np.isfinite(cap)):
            raise ValidationError("capacity contains nonfinite entries")
        if np.any(cap < 0.0):
            raise ValidationError("capacity entries must be nonnegative")
        mismatch = np.argwhere(cap != cap.T)
        if mismatch.size:
            i, j = (int(k) for k in mismatch[0])
            raise ValidationError(
                f"capacity is not symmetric: a[{i},{j}] != a[{j},{i}]"
            )
        cap.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "frictions", frictions)
        object.__setattr__(self, "natural_freqs", nus)
        object.__setattr__(self, "coupling", kappa)
        object.__setattr__(self, "capacity", cap)

    @classmethod
    def all_to_all(cls, n: int, *, mass: float, friction: float,
                   coupling: float, natural_freq: float = 0.0) -> "ModelParams":
        """Uniform oscillators on the complete graph with a_ij = 1/n."""
        return cls(
            masses=np.full(n, float(mass)),
            frictions=np.full(n, float(friction)),
            natural_freqs=np.full(n, float(natural_freq)),
            coupling=coupling,
            capacity=np.full((n, n), 1.0 / n),
        )

    @property
    def n(self) -> int:
        return self.masses.size

    def is_all_to_all(self) -> bool:
        return bool(np.all(self.capacity == 1.0 / self.n))

    def is_homogeneous(self) -> bool:
        """Equal masses and equal frictions (natural frequencies may vary)."""
        return bool(
            np.all(self.masses == self.masses[0])
            and np.all(self.frictions == self.frictions[0])
        )

    def variant(self) -> ModelVariant:
        if (
            self.is_homogeneous()
            and np.all(self.natural_freqs == self.natural_freqs[0])
            and self.is_all_to_all()
        ):
            return ModelVariant.HOMOGENEOUS_ALL_TO_ALL
        return ModelVariant.HETEROGENEOUS_NETWORK


def _require_same_n(n_state: int, params: ModelParams) -> None:
    if n_state != params.n:
        raise DimensionError(
            f"state has {n_state} oscillators but params has {params.n}"
        )


def coupling_sum(theta: np.ndarray, params: ModelParams) -> np.ndarray:
    """Vector with components kappa * sum_j a_ij sin(theta_j - theta_i)."""
    theta = np.asarray(theta, dtype=np.float64)
    _require_same_n(theta.size, params)
    diffs = theta[np.newaxis, :] - theta[:, np.newaxis]
    return params.coupling * (params.capacity * np.sin(diffs)).sum(axis=1)


def rhs(state: OscillatorEnsemble, params: ModelParams) -> StateDerivative:
    """Right-hand side of the first-order system at the given state."""
    _require_same_n(state.n, params)
    force = coupling_sum(state.theta, params)
    domega = (-params.frictions * state.omega + params.natural_freqs + force) / params.masses
    return StateDerivative(dtheta=state.omega.copy(), domega=domega)


def equilibrium_residual(theta: np.ndarray, params: ModelParams) -> np.ndarray:
    """r_i = nu_i + kappa sum_j a_ij sin(theta_j - theta_i); zero at rest states."""
    return params.natural_freqs + coupling_sum(theta, params)


def potential(theta: np.ndarray, params: ModelParams) -> float:
    """V(theta) = -sum_j nu_j theta_j + (kappa/2) sum_ij a_ij (1 - cos(theta_i - theta_j))."""
    theta = np.asarray(theta, dtype=np.float64)
    _require_same_n(theta.size, params)
    diffs = theta[:, np.newaxis] - theta[np.newaxis, :]
    interaction = 0.5 * params.coupling * (params.capacity * (1.0 - np.cos(diffs))).sum()
    return float(interaction - params.natural_freqs @ theta)


def grad_potential(theta: np.ndarray, params: ModelParams) -> np.ndarray:
    """Gradient of the potential; equals the negated equilibrium residual exactly."""
    return -equilibrium_residual(theta, params)


def comoving_shift(state: OscillatorEnsemble, params: ModelParams) -> OscillatorEnsemble:
    """Center a homogeneous ensemble so that mean phase and mean frequency vanish.

    Pairwise differences theta_i - theta_j and omega_i - omega_j are
    unchanged.  Only valid when masses and frictions are uniform: the mean
    obeys an autonomous closed-form ODE in that case, so the shifted state
    evolves like a solution of the nu-centered system.
    """
    if not params.is_homogeneous():
        raise VariantError(
            "comoving shift requires uniform masses and frictions"
        )
    return OscillatorEnsemble(
        theta=state.theta - state.theta.mean(),
        omega=state.omega - state.omega.mean(),
    )
