"""Sufficient-condition checkers, lock-state classification, and decay fits.

The five checkable synchronization conditions are identified by the opaque
ids T31..T35 used throughout the report formats:

  T31  identical oscillators, inertia-coupling product in a split window
  T32  small inertia with a trigonometric threshold angle
  T33  large inertia with a diameter cap proportional to m D(nu)
  T34  all-to-all: initial kinetic spread below kappa R(0)^2
  T35  near-uniform network: initial cosine sum dominates kinetic energy

Each checker returns a ConditionVerdict whose margins expose every quantity
entering the condition, so callers can see how far from the threshold an
instance sits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InsufficientMarginError, ValidationError, VariantError
from .integrate import Trajectory
from .model import ModelParams, ModelVariant, OscillatorEnsemble
from .observables import DEGENERATE_EPS, diameters, global_order


@dataclass(frozen=True)
class ConditionVerdict:
    condition_id: str
    satisfied: bool
    margins: dict


class LockKind(Enum):
    ONE_POINT_CLUSTER = "one_point_cluster"
    BIPOLAR = "bipolar"
    ZERO_ORDER_PARAMETER = "zero_order_parameter"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class LockClassification:
    kind: LockKind
    k: int
    phi_star: float
    residual: float


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r2: float
    window: tuple


def check_large_coupling(init: OscillatorEnsemble, params: ModelParams) -> ConditionVerdict:
    """T34: kappa > 0 and (m/N) sum |omega_i(0)|^2 <= kappa R(0)^2."""
    if params.variant() is not ModelVariant.HOMOGENEOUS_ALL_TO_ALL:
        raise VariantError("T34 applies to the homogeneous all-to-all variant")
    if np.any(params.natural_freqs != 0.0):
        raise VariantError("T34 requires zero natural frequencies")
    m = float(params.masses[0])
    n = params.n
    kinetic_term = m / n * float(init.omega @ init.omega)
    order = global_order(init.theta)
    r0 = order.r
    coherence_term = params.coupling * r0 * r0
    if not order.degenerate:
        kappa_star = kinetic_term / (r0 * r0)
    else:
        kappa_star = 0.0 if kinetic_term == 0.0 else math.inf
    satisfied = params.coupling > 0.0 and kinetic_term <= coherence_term
    return ConditionVerdict(
        condition_id="T34",
        satisfied=bool(satisfied),
        margins={
            "kinetic_term": kinetic_term,
            "coherence_term": coherence_term,
            "kappa": params.coupling,
            "kappa_star": kappa_star,
            "r0": r0,
        },
    )


def _off_diagonal_mean(capacity: np.ndarray) -> float:
    n = capacity.shape[0]
    if n == 1:
        return float(capacity[0, 0])
    return float((capacity.sum() - np.trace(capacity)) / (n * (n - 1)))


def check_near_uniform(init: OscillatorEnsemble, params: ModelParams,
                       a_bar: float | None = None) -> ConditionVerdict:
    """T35: sum_ij a_ij cos(theta_i(0)-theta_j(0)) >= sum m_i omega_i(0)^2 + 3 delta N + delta^2/a_bar.

    The witness a_bar defaults to the off-diagonal mean of the capacity
    matrix; delta is then computed as max_i sum_j |a_ij - a_bar|.
    """
    if a_bar is None:
        a_bar = _off_diagonal_mean(params.capacity)
    if a_bar <= 0.0:
        raise ValidationError("a_bar must be positive")
    n = params.n
    delta = float(np.max(np.abs(params.capacity - a_bar).sum(axis=1)))
    diffs = init.theta[:, np.newaxis] - init.theta[np.newaxis, :]
    cosine_sum = float((params.capacity * np.cos(diffs)).sum())
    kinetic = float(params.masses @ (init.omega ** 2))
    threshold = kinetic + 3.0 * delta * n + delta * delta / a_bar
    margins = {
        "a_bar": a_bar,
        "delta": delta,
        "cosine_sum": cosine_sum,
        "threshold": threshold,
        "kinetic": kinetic,
        "j0_kappa_half": 0.5 * params.coupling * cosine_sum - 0.5 * kinetic,
        "j0_energy": (cosine_sum - kinetic / params.coupling
                      if params.coupling > 0.0 else math.nan),
    }
    return ConditionVerdict(
        condition_id="T35",
        satisfied=bool(cosine_sum >= threshold),
        margins=margins,
    )


def solve_sine_threshold(ratio: float) -> float | None:
    """Bisection for the root of sin x = ratio on (0, pi/2]; None if ratio not in (0, 1]."""
    if not (0.0 < ratio <= 1.0):
        return None
    if ratio == 1.0:
        # sine is flat to machine precision near the endpoint
        return 0.5 * math.pi
    lo, hi = 0.0, 0.5 * math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.sin(mid) < ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_diameter_condition(init: OscillatorEnsemble, params: ModelParams,
                             condition: str) -> ConditionVerdict:
    """T31/T32/T33: diameter-based conditions for unit friction and equal inertia."""
    if condition not in ("T31", "T32", "T33"):
        raise ValidationError(f"unknown diameter condition {condition!r}")
    if not np.all(params.masses == params.masses[0]):
        raise VariantError("diameter conditions assume equal inertia")
    if not np.all(params.frictions == 1.0):
        raise VariantError("diameter conditions assume unit friction")
    m = float(params.masses[0])
    mk = m * params.coupling
    dia = diameters(init, params)
    d_nu = dia.d_nu

    if condition == "T31":
        nu_identical = bool(np.all(params.natural_freqs == params.natural_freqs[0]))
        c1 = dia.c1
        large_lower = c1 / (4.0 * math.sin(c1)) if 0.0 < c1 < math.pi else math.nan
        in_window = (0.0 < mk < 0.25) or (math.isfinite(large_lower) and mk > large_lower)
        satisfied = nu_identical and 0.0 < c1 < math.pi and in_window
        margins = {
            "c1_0": c1,
            "m_kappa": mk,
            "small_window_upper": 0.25,
            "large_window_lower": large_lower,
            "nu_identical": nu_identical,
        }
        return ConditionVerdict("T31", bool(satisfied), margins)

    c2 = dia.c2
    if condition == "T32":
        ratio = d_nu / params.coupling if params.coupling > 0.0 else math.inf
        d_inf = solve_sine_threshold(ratio) if d_nu > 0.0 else None
        mk_upper = (d_inf / (4.0 * math.sin(d_inf))) if d_inf else math.nan
        satisfied = (
            d_inf is not None
            and 0.0 < d_nu < params.coupling
            and 0.0 < mk < mk_upper
            and 0.0 < c2 < d_inf
        )
        margins = {
            "d_nu": d_nu,
            "kappa": params.coupling,
            "ratio": ratio,
            "d_inf_1": d_inf if d_inf is not None else math.nan,
            "root_exists": d_inf is not None,
            "mk_upper": mk_upper,
            "m_kappa": mk,
            "c2_0": c2,
        }
        return ConditionVerdict("T32", bool(satisfied), margins)

    d_nu_cap = math.pi / (8.0 * m)
    satisfied = (
        0.0 < d_nu < d_nu_cap
        and mk >= math.pi / 8.0
        and 0.0 < c2 < 4.0 * m * d_nu
    )
    margins = {
        "d_nu": d_nu,
        "d_nu_cap": d_nu_cap,
        "m_kappa": mk,
        "mk_lower": math.pi / 8.0,
        "c2_0": c2,
        "c2_upper": 4.0 * m * d_nu,
    }
    return ConditionVerdict("T33", bool(satisfied), margins)


def _circle_distance(a, b):
    d = np.abs(a - b) % (2.0 * math.pi)
    return np.minimum(d, 2.0 * math.pi - d)


def classify_lock(theta: np.ndarray, tol_angle: float = 1e-3,
                  eps_r: float = DEGENERATE_EPS) -> LockClassification:
    """Classify a phase configuration against the two-pole lock structure.

    Searches the wrapped phases and their antipodes exhaustively for the
    reference pole minimizing the summed squared angular deviation to the
    pole set {phi, phi+pi}; exact for tolerances below pi/4.
    """
    if not (0.0 < tol_angle < math.pi / 4.0):
        raise ValidationError("tol_angle must lie in (0, pi/4)")
    theta = np.asarray(theta, dtype=np.float64)
    wrapped = np.mod(theta, 2.0 * math.pi)
    n = wrapped.size

    best_score = math.inf
    best = None
    for phi in np.concatenate([wrapped, wrapped + math.pi]):
        d_main = _circle_distance(wrapped, phi)
        d_anti = _circle_distance(wrapped, phi + math.pi)
        d = np.minimum(d_main, d_anti)
        score = float(d @ d)
        if score < best_score:
            best_score = score
            best = (phi, d_main, d_anti, float(d.max()))

    phi, d_main, d_anti, residual = best
    if residual <= tol_angle:
        k = int(np.sum(d_main <= d_anti))
        if 2 * k < n:
            k = n - k
            phi = phi + math.pi
        if k == n:
            return LockClassification(LockKind.ONE_POINT_CLUSTER, k,
                                      float(np.mod(phi, 2.0 * math.pi)), residual)
        if 2 * k > n:
            return LockClassification(LockKind.BIPOLAR, k,
                                      float(np.mod(phi, 2.0 * math.pi)), residual)
        # exact half/half split is not a majority lock; fall through

    if global_order(theta).r < eps_r:
        return LockClassification(LockKind.ZERO_ORDER_PARAMETER, 0, 0.0, residual)
    return LockClassification(LockKind.UNCLASSIFIED, 0, 0.0, residual)


def detect_sync(traj: Trajectory, tol_freq: float,
                hold_time: float = 10.0) -> float | None:
    """Earliest sample time from which the frequency spread stays below tol.

    Requires the below-tolerance tail to span at least hold_time; returns
    None when no such time exists in the trajectory.
    """
    if tol_freq <= 0.0:
        raise ValidationError("tol_freq must be positive")
    spread = traj.omegas.max(axis=1) - traj.omegas.min(axis=1)
    bad = np.where(spread > tol_freq)[0]
    k = 0 if bad.size == 0 else int(bad[-1]) + 1
    if k >= len(traj):
        return None
    if traj.times[-1] - traj.times[k] < hold_time:
        return None
    return float(traj.times[k])


def _bounds_for_convention(j0: float, a_bar: float, delta: float, n: int) -> dict:
    rp_sq = (j0 - delta * n) / (a_bar * n * n)
    local_sq = a_bar * (j0 - 3.0 * delta * n) - delta * delta
    valid = rp_sq > 0.0 and local_sq > 0.0
    if valid:
        c0 = math.sqrt(a_bar * a_bar * n * n
                       + a_bar * n * n * (2.0 * a_bar * delta * n + delta * delta)
                       / (j0 - delta * n))
        cos_bound = a_bar * n / c0 - delta * c0 / local_sq
        r_local = math.sqrt(local_sq)
    else:
        c0 = math.nan
        cos_bound = math.nan
        r_local = math.nan
    return {
        "j0": j0,
        "r_p_sq_lower": rp_sq,
        "r_local_lower": r_local,
        "c0": c0,
        "cos_gap_lower": cos_bound,
        "valid": valid,
    }


def coherence_lower_bounds(init: OscillatorEnsemble, params: ModelParams,
                           a_bar: float | None = None,
                           delta: float | None = None) -> dict:
    """Trajectory-wide lower bounds on R^2, R_i, and cos(phi_i - phi).

    Computed under both normalization conventions for the conserved initial
    margin J0 (see the T35 margins): "kappa_half" keeps the kappa/2 energy
    prefactor; "energy" rescales so the bound follows from monotonicity of
    the total energy for any kappa.  The majorization constant C0 satisfies
    R_i <= C0 R, and the cosine bound equals 1 exactly when delta = 0.

    Raises InsufficientMarginError when both conventions give a nonpositive
    local bound.
    """
    if a_bar is None:
        a_bar = _off_diagonal_mean(params.capacity)
    if a_bar <= 0.0:
        raise ValidationError("a_bar must be positive")
    n = params.n
    if delta is None:
        delta = float(np.max(np.abs(params.capacity - a_bar).sum(axis=1)))
    diffs = init.theta[:, np.newaxis] - init.theta[np.newaxis, :]
    cosine_sum = float((params.capacity * np.cos(diffs)).sum())
    kinetic = float(params.masses @ (init.omega ** 2))

    j0_half = 0.5 * params.coupling * cosine_sum - 0.5 * kinetic
    conventions = {"kappa_half": _bounds_for_convention(j0_half, a_bar, delta, n)}
    if params.coupling > 0.0:
        j0_energy = cosine_sum - kinetic / params.coupling
        conventions["energy"] = _bounds_for_convention(j0_energy, a_bar, delta, n)

    if not any(c["valid"] for c in conventions.values()):
        raise InsufficientMarginError(
            "initial margin J0 too small: every lower bound is nonpositive")
    return {"a_bar": a_bar, "delta": delta, "conventions": conventions}


def gronwall_envelope(y0: float, alpha: float, beta: np.ndarray,
                      t_grid: np.ndarray) -> np.ndarray:
    """Pointwise decay envelope for y' + alpha y = beta(t).

    envelope(t) = y0 e^{-alpha t} + max_{s in [t/2, t]} |beta(s)| / alpha
                  + (max_s |beta(s)| / alpha) e^{-alpha t / 2}

    beta is sampled on t_grid (increasing from 0).
    """
    if alpha <= 0.0:
        raise ValidationError("alpha must be positive")
    t = np.asarray(t_grid, dtype=np.float64)
    b = np.abs(np.asarray(beta, dtype=np.float64))
    if t.shape != b.shape:
        raise ValidationError("beta samples must align with t_grid")
    b_inf = float(b.max())
    env = np.empty_like(t)
    for k, tk in enumerate(t):
        lo = np.searchsorted(t, 0.5 * tk - 1e-12, side="left")
        hi = np.searchsorted(t, tk + 1e-12, side="right")
        window_max = float(b[lo:hi].max())
        env[k] = (y0 * math.exp(-alpha * tk)
                  + window_max / alpha
                  + b_inf / alpha * math.exp(-0.5 * alpha * tk))
    return env


def fit_decay(times: np.ndarray, values: np.ndarray,
              window: tuple) -> DecayFit:
    """Least-squares exponential rate of a positive scalar: slope of log(value) vs t."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    t0, t1 = window
    mask = (times >= t0) & (times <= t1)
    if int(mask.sum()) < 2:
        raise ValidationError("fit window must contain at least two samples")
    if np.any(values[mask] <= 0.0):
        raise ValidationError("fit window contains nonpositive samples")
    x = times[mask]
    y = np.log(values[mask])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot < 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(rate=float(-slope), r2=r2, window=(float(t0), float(t1)))
