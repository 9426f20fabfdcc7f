import numpy as np
import pytest

from kuramoto_inertia import ModelParams, OscillatorEnsemble


def random_symmetric_capacity(rng, n):
    a = rng.uniform(0.0, 1.0, (n, n))
    return 0.5 * (a + a.T)


def random_params(rng, n, *, homogeneous=False, kappa=None, nu_scale=0.5):
    if kappa is None:
        kappa = float(rng.uniform(0.2, 2.0))
    if homogeneous:
        return ModelParams.all_to_all(
            n, mass=float(rng.uniform(0.3, 2.0)),
            friction=float(rng.uniform(0.5, 2.0)), coupling=kappa)
    return ModelParams(
        masses=rng.uniform(0.3, 2.0, n),
        frictions=rng.uniform(0.5, 2.0, n),
        natural_freqs=rng.uniform(-nu_scale, nu_scale, n),
        coupling=kappa,
        capacity=random_symmetric_capacity(rng, n),
    )


def random_state(rng, n, omega_scale=1.0):
    return OscillatorEnsemble(theta=rng.uniform(-np.pi, np.pi, n),
                              omega=rng.uniform(-omega_scale, omega_scale, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
