import numpy as np
import pytest

from horizonwave import model as hwm


BASE = dict(mass=1.0, lam=0.03, v0=0.1, ell=2)


@pytest.fixture(scope="session")
def baseline():
    """Normalized two-horizon baseline model and slice."""
    model = hwm.build_model(BASE["mass"], BASE["lam"], BASE["v0"], BASE["ell"])
    geom = hwm.build_slice(model)
    return hwm.normalize(model, geom)


@pytest.fixture(scope="session")
def coeffs(baseline):
    model, geom = baseline
    return hwm.reduce_pencil(model, geom)


@pytest.fixture(scope="session")
def pencil96(coeffs):
    from horizonwave import spectra
    return spectra.discretize(coeffs, 96, "collocation")
