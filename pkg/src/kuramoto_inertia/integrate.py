"""Fixed-step time integration and the closed-form mean dynamics.

RK4 is the reference scheme; semi-implicit Euler is available for long
energy studies.  A trailing short step is taken so that ``t_final`` is hit
exactly.  Trajectories are sampled every ``sample_every`` steps and always
include the initial and final states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .errors import SimulationError, ValidationError
from .model import ModelParams, OscillatorEnsemble


class Scheme(Enum):
    RK4 = "rk4"
    SEMI_IMPLICIT_EULER = "semi_implicit_euler"


_SCHEME_CODES = {Scheme.RK4: _backend.RK4,
                 Scheme.SEMI_IMPLICIT_EULER: _backend.SEMI_IMPLICIT_EULER}


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    sample_every: int = 1
    scheme: Scheme = Scheme.RK4

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValidationError("dt must be positive and finite")
        if not (np.isfinite(self.t_final) and self.t_final >= 0.0):
            raise ValidationError("t_final must be nonnegative and finite")
        if int(self.sample_every) < 1:
            raise ValidationError("sample_every must be >= 1")
        object.__setattr__(self, "sample_every", int(self.sample_every))
        if not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))


@dataclass(frozen=True)
class Trajectory:
    """Sampled states: times[k] pairs with thetas[k], omegas[k]."""

    times: np.ndarray
    thetas: np.ndarray
    omegas: np.ndarray
    params: ModelParams

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise ValidationError("sample times must start at 0 and strictly increase")
        if not (len(times) == len(self.thetas) == len(self.omegas)):
            raise ValidationError("times and state arrays must have equal length")

    def __len__(self) -> int:
        return self.times.size

    def state(self, k: int) -> OscillatorEnsemble:
        return OscillatorEnsemble(theta=self.thetas[k], omega=self.omegas[k])

    @property
    def initial_state(self) -> OscillatorEnsemble:
        return self.state(0)

    @property
    def final_state(self) -> OscillatorEnsemble:
        return self.state(-1)

    def states(self):
        for k in range(len(self)):
            yield self.state(k)


def _step_plan(dt: float, t_final: float) -> tuple[int, float]:
    """Number of full dt steps plus the trailing step size (0 if none)."""
    n_full = int(np.floor(t_final / dt + 1e-9))
    trailing = t_final - n_full * dt
    if trailing <= dt * 1e-9:
        trailing = 0.0
    return n_full, trailing


def _kernel_args(params: ModelParams):
    capacity = None if params.is_all_to_all() else params.capacity.copy()
    return (params.masses.copy(), params.frictions.copy(),
            params.natural_freqs.copy(), params.coupling, capacity)


def step(state: OscillatorEnsemble, params: ModelParams, dt: float,
         scheme: Scheme = Scheme.RK4, backend: str = "auto") -> OscillatorEnsemble:
    """Advance one explicit step of size dt."""
    if dt <= 0.0:
        raise ValidationError("dt must be positive")
    advance = _backend.get_advance(backend)
    theta = state.theta.copy()
    omega = state.omega.copy()
    masses, frictions, nus, kappa, capacity = _kernel_args(params)
    status = advance(theta, omega, masses, frictions, nus, kappa, capacity,
                     float(dt), 1, _SCHEME_CODES[Scheme(scheme)])
    if status:
        raise SimulationError(step_index=1, time=float(dt))
    return OscillatorEnsemble(theta=theta, omega=omega)


def simulate(init: OscillatorEnsemble, params: ModelParams,
             config: IntegratorConfig, backend: str = "auto") -> Trajectory:
    """Integrate from t=0 to t=config.t_final; deterministic given inputs."""
    advance = _backend.get_advance(backend)
    scheme = _SCHEME_CODES[config.scheme]
    masses, frictions, nus, kappa, capacity = _kernel_args(params)
    if init.n != params.n:
        raise ValidationError(
            f"initial state has {init.n} oscillators, params has {params.n}")

    theta = init.theta.copy()
    omega = init.omega.copy()
    n_full, trailing = _step_plan(config.dt, config.t_final)

    times = [0.0]
    thetas = [theta.copy()]
    omegas = [omega.copy()]

    def record(t: float) -> None:
        times.append(t)
        thetas.append(theta.copy())
        omegas.append(omega.copy())

    done = 0
    while done < n_full:
        chunk = min(config.sample_every - (done % config.sample_every),
                    n_full - done)
        status = advance(theta, omega, masses, frictions, nus, kappa,
                         capacity, config.dt, chunk, scheme)
        if status:
            bad = done + status
            raise SimulationError(step_index=bad, time=bad * config.dt)
        done += chunk
        if done == n_full and trailing == 0.0:
            # n_full * dt can land an ulp away from t_final; report exactly.
            record(config.t_final)
        elif done % config.sample_every == 0:
            record(done * config.dt)
    if trailing > 0.0:
        status = advance(theta, omega, masses, frictions, nus, kappa,
                         capacity, trailing, 1, scheme)
        if status:
            raise SimulationError(step_index=n_full + 1, time=config.t_final)
        record(config.t_final)

    return Trajectory(times=np.array(times), thetas=np.array(thetas),
                      omegas=np.array(omegas), params=params)


def mean_closed_form(t, theta_c0: float, omega_c0: float, m: float,
                     gamma: float, nu_c: float):
    """Closed-form mean phase and frequency of a homogeneous ensemble.

    Solves m theta_c'' + gamma theta_c' = nu_c, the equation obeyed by the
    averages when masses and frictions are uniform:

        theta_c(t) = theta_c(0) + t nu_c
                     + (m/gamma) (omega_c(0) - nu_c) (1 - exp(-gamma t / m))
        omega_c(t) = nu_c + (omega_c(0) - nu_c) exp(-gamma t / m)

    Accepts scalar or array t; returns (theta_c, omega_c).
    """
    if m <= 0.0 or gamma <= 0.0:
        raise ValidationError("mass and friction must be positive")
    t = np.asarray(t, dtype=np.float64)
    decay = np.exp(-gamma * t / m)
    omega_c = nu_c + (omega_c0 - nu_c) * decay
    theta_c = theta_c0 + t * nu_c + (m / gamma) * (omega_c0 - nu_c) * (1.0 - decay)
    if t.ndim == 0:
        return float(theta_c), float(omega_c)
    return theta_c, omega_c
