import numpy as np
import pytest

from horizonwave import model as hwm


def test_metric_vanishes_at_horizons():
    model = hwm.build_model(1.0, 0.03, 0.1, 2)
    assert abs(model.f(model.rt_min)) < 1e-12
    assert abs(model.f(model.rt_max)) < 1e-12
    # static region in between
    mid = 0.5 * (model.rt_min + model.rt_max)
    assert model.f(mid) > 0.0


def test_surface_gravity_matches_finite_difference():
    # kappa = |f'(r_h)| / 2, checked against a central difference of f
    model = hwm.build_model(1.0, 0.03, 0.1, 2)
    h = 1e-6
    for rh in (model.rt_min, model.rt_max):
        kappa_fd = abs(model.f(rh + h) - model.f(rh - h)) / (2.0 * h) / 2.0
        if rh == model.rt_min:
            assert kappa_fd == pytest.approx(model.kappa_designated, rel=1e-8)
        else:
            assert kappa_fd > 0.0


def test_degenerate_parameters_rejected():
    with pytest.raises(hwm.ModelError):
        hwm.build_model(1.0, 1.0 / 9.0 + 1e-3, 0.1, 2)   # no static region
    with pytest.raises(hwm.ModelError):
        hwm.build_model(1.0, 0.03, -0.1, 2)              # v0 must be positive
    # explicit opt-in for v0 <= 0
    hwm.build_model(1.0, 0.03, 0.0, 0, allow_nonpositive_v0=True)


def test_collar_chart_round_trip(baseline):
    model, geom = baseline
    nf = geom.normal
    rt = np.linspace(model.rt_min * 1.001, model.rt_max * 0.999, 31)
    back = nf.rt_of_r(nf.r_of_rt(rt))
    assert np.max(np.abs(back - rt)) < 1e-10


def test_collar_length_positive(baseline):
    model, geom = baseline
    nf = geom.normal
    assert nf.r_total > 0.0
    # collar coordinate vanishes at the designated horizon
    assert abs(nf.r_of_rt(model.rt_min)) < 1e-10


def test_slice_lapse_and_measure_positive(baseline):
    model, geom = baseline
    x = np.linspace(0.02, 0.98, 41)
    assert np.all(geom.lapse(x) > 0.0)
    assert np.all(geom.mu(x) > 0.0)


def test_pencil_symbol_consistency(coeffs):
    # the quadratic symbol must reassemble from the coefficient functions
    rt = np.linspace(coeffs.model.rt_min * 1.01, coeffs.model.rt_max * 0.99, 7)
    xi, omega = 0.7, 1.3 - 0.2j
    direct = coeffs.quadratic_symbol(rt, xi, omega)
    p0 = -coeffs.a2(rt) * xi**2 + 1j * coeffs.a1(rt) * xi + coeffs.a0(rt)
    p1 = 1j * (1j * coeffs.b1(rt) * xi + coeffs.b0(rt))
    rebuilt = p0 + omega * p1 + omega**2 * coeffs.c0(rt)
    assert np.max(np.abs(direct - rebuilt)) < 1e-12 * np.max(np.abs(direct))
