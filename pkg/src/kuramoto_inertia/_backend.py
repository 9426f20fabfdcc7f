"""Stepping kernels: compiled core with a NumPy fallback, selected at import.

Both backends implement the same contract::

    advance(theta, omega, masses, frictions, nus, kappa, capacity,
            dt, n_steps, scheme) -> int

advancing the state in place by ``n_steps`` fixed steps of size ``dt`` and
returning 0 on success or the 1-based index of the first step that produced
a nonfinite entry.  ``capacity=None`` selects the uniform all-to-all coupling
a_ij = 1/N, evaluated in O(N) per stage through the phase sums
sum_j sin(theta_j - theta_i) = cos(theta_i) S - sin(theta_i) C with
S = sum_j sin(theta_j), C = sum_j cos(theta_j).

Scheme codes: 0 = classical RK4, 1 = semi-implicit Euler (frequency update
first, then phases with the new frequencies).
"""

from __future__ import annotations

import numpy as np

try:
    from . import _speedups as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

RK4 = 0
SEMI_IMPLICIT_EULER = 1

COMPILED_AVAILABLE = _compiled is not None


def _accel(theta, omega, masses, frictions, nus, kappa, capacity, n):
    if capacity is None:
        s = np.sin(theta)
        c = np.cos(theta)
        force = (kappa / n) * (c * s.sum() - s * c.sum())
    else:
        force = kappa * (capacity * np.sin(theta[np.newaxis, :] - theta[:, np.newaxis])).sum(axis=1)
    return (force + nus - frictions * omega) / masses


def advance_python(theta, omega, masses, frictions, nus, kappa, capacity,
                   dt, n_steps, scheme) -> int:
    """Pure NumPy reference implementation of the stepping contract."""
    n = theta.size
    for step in range(1, n_steps + 1):
        if scheme == RK4:
            k1w = _accel(theta, omega, masses, frictions, nus, kappa, capacity, n)
            t2 = theta + (0.5 * dt) * omega
            w2 = omega + (0.5 * dt) * k1w
            k2w = _accel(t2, w2, masses, frictions, nus, kappa, capacity, n)
            t3 = theta + (0.5 * dt) * w2
            w3 = omega + (0.5 * dt) * k2w
            k3w = _accel(t3, w3, masses, frictions, nus, kappa, capacity, n)
            t4 = theta + dt * w3
            w4 = omega + dt * k3w
            k4w = _accel(t4, w4, masses, frictions, nus, kappa, capacity, n)
            theta += (dt / 6.0) * (omega + 2.0 * w2 + 2.0 * w3 + w4)
            omega += (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        else:
            omega += dt * _accel(theta, omega, masses, frictions, nus, kappa, capacity, n)
            theta += dt * omega
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(omega))):
            return step
    return 0


def advance_compiled(theta, omega, masses, frictions, nus, kappa, capacity,
                     dt, n_steps, scheme) -> int:
    if _compiled is None:
        raise RuntimeError("compiled kernels are not available in this install")
    if capacity is None:
        return _compiled.advance_all_to_all(
            theta, omega, masses, frictions, nus, kappa, dt, n_steps, scheme
        )
    return _compiled.advance_network(
        theta, omega, masses, frictions, nus, kappa, capacity, dt, n_steps, scheme
    )


def get_advance(backend: str = "auto"):
    """Resolve a backend name to its advance function."""
    if backend == "auto":
        return advance_compiled if COMPILED_AVAILABLE else advance_python
    if backend == "compiled":
        return advance_compiled
    if backend == "python":
        return advance_python
    raise ValueError(f"unknown backend {backend!r}; use auto, compiled, or python")
