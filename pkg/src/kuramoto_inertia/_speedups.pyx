# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels for the inertial Kuramoto system.

Same contract as the NumPy fallback in ``_backend``: advance (theta, omega)
in place by n_steps fixed steps, return 0 on success or the 1-based index of
the first step with a nonfinite entry.  Scheme 0 is classical RK4, scheme 1
is semi-implicit Euler.
"""

import numpy as np

from libc.math cimport sin, cos, isfinite


cdef void _accel_all_to_all(double[::1] theta, double[::1] omega,
                            double[::1] masses, double[::1] frictions,
                            double[::1] nus, double kappa,
                            double[::1] sbuf, double[::1] cbuf,
                            double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i
    cdef double s_sum = 0.0, c_sum = 0.0, force
    for i in range(n):
        sbuf[i] = sin(theta[i])
        cbuf[i] = cos(theta[i])
        s_sum += sbuf[i]
        c_sum += cbuf[i]
    for i in range(n):
        force = (kappa / n) * (cbuf[i] * s_sum - sbuf[i] * c_sum)
        out[i] = (force + nus[i] - frictions[i] * omega[i]) / masses[i]


cdef void _accel_network(double[::1] theta, double[::1] omega,
                         double[::1] masses, double[::1] frictions,
                         double[::1] nus, double kappa,
                         double[:, ::1] capacity,
                         double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += capacity[i, j] * sin(theta[j] - theta[i])
        out[i] = (kappa * acc + nus[i] - frictions[i] * omega[i]) / masses[i]


cdef int _finite(double[::1] theta, double[::1] omega) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(theta.shape[0]):
        if not (isfinite(theta[i]) and isfinite(omega[i])):
            return 0
    return 1


cdef long _advance(double[::1] theta, double[::1] omega,
                   double[::1] masses, double[::1] frictions,
                   double[::1] nus, double kappa,
                   double[:, ::1] capacity, bint all_to_all,
                   double dt, long n_steps, int scheme,
                   double[::1] sbuf, double[::1] cbuf,
                   double[::1] t2, double[::1] w2, double[::1] t3,
                   double[::1] w3, double[::1] t4, double[::1] w4,
                   double[::1] k1, double[::1] k2, double[::1] k3,
                   double[::1] k4) noexcept nogil:
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i
    cdef long step
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    for step in range(1, n_steps + 1):
        if scheme == 0:
            if all_to_all:
                _accel_all_to_all(theta, omega, masses, frictions, nus, kappa, sbuf, cbuf, k1)
            else:
                _accel_network(theta, omega, masses, frictions, nus, kappa, capacity, k1)
            for i in range(n):
                t2[i] = theta[i] + h2 * omega[i]
                w2[i] = omega[i] + h2 * k1[i]
            if all_to_all:
                _accel_all_to_all(t2, w2, masses, frictions, nus, kappa, sbuf, cbuf, k2)
            else:
                _accel_network(t2, w2, masses, frictions, nus, kappa, capacity, k2)
            for i in range(n):
                t3[i] = theta[i] + h2 * w2[i]
                w3[i] = omega[i] + h2 * k2[i]
            if all_to_all:
                _accel_all_to_all(t3, w3, masses, frictions, nus, kappa, sbuf, cbuf, k3)
            else:
                _accel_network(t3, w3, masses, frictions, nus, kappa, capacity, k3)
            for i in range(n):
                t4[i] = theta[i] + dt * w3[i]
                w4[i] = omega[i] + dt * k3[i]
            if all_to_all:
                _accel_all_to_all(t4, w4, masses, frictions, nus, kappa, sbuf, cbuf, k4)
            else:
                _accel_network(t4, w4, masses, frictions, nus, kappa, capacity, k4)
            for i in range(n):
                theta[i] = theta[i] + h6 * (omega[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i])
                omega[i] = omega[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        else:
            if all_to_all:
                _accel_all_to_all(theta, omega, masses, frictions, nus, kappa, sbuf, cbuf, k1)
            else:
                _accel_network(theta, omega, masses, frictions, nus, kappa, capacity, k1)
            for i in range(n):
                omega[i] = omega[i] + dt * k1[i]
                theta[i] = theta[i] + dt * omega[i]
        if not _finite(theta, omega):
            return step
    return 0


def advance_all_to_all(double[::1] theta, double[::1] omega,
                       double[::1] masses, double[::1] frictions,
                       double[::1] nus, double kappa,
                       double dt, long n_steps, int scheme):
    cdef Py_ssize_t n = theta.shape[0]
    buf = np.empty((14, n), dtype=np.float64)
    cdef double[:, ::1] b = buf
    cdef double[:, ::1] dummy = np.empty((1, 1), dtype=np.float64)
    cdef long status
    with nogil:
        status = _advance(theta, omega, masses, frictions, nus, kappa,
                          dummy, True, dt, n_steps, scheme,
                          b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
                          b[8], b[9], b[10], b[11])
    return status


def advance_network(double[::1] theta, double[::1] omega,
                    double[::1] masses, double[::1] frictions,
                    double[::1] nus, double kappa,
                    double[:, ::1] capacity,
                    double dt, long n_steps, int scheme):
    cdef Py_ssize_t n = theta.shape[0]
    buf = np.empty((14, n), dtype=np.float64)
    cdef double[:, ::1] b = buf
    cdef long status
    with nogil:
        status = _advance(theta, omega, masses, frictions, nus, kappa,
                          capacity, False, dt, n_steps, scheme,
                          b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
                          b[8], b[9], b[10], b[11])
    return status
