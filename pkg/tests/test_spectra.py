import numpy as np
import pytest

from horizonwave import model as hwm
from horizonwave import spectra as hws


def test_differentiation_matrix_spectral_accuracy():
    x = hws.cheb_lobatto(32)
    D = hws.diff_matrix(x)
    err = np.max(np.abs(D @ np.exp(x) - np.exp(x)))
    assert err < 1e-10


def test_fd4_matrix_fourth_order():
    errs = []
    for n in (101, 201):
        x = np.linspace(0.0, 1.0, n)
        D = hws.fd4_matrix(n, x[1] - x[0])
        u = np.sin(2.0 * np.pi * x)
        errs.append(np.max(np.abs(D @ u - 2.0 * np.pi * np.cos(2.0 * np.pi * x))))
    assert errs[0] / errs[1] > 12.0   # ~ 2^4


def test_pure_de_sitter_analytic_ladder():
    # one-horizon model: frequencies -i (2n + ell + h-) with
    # h- = 3/2 - sqrt(9/4 - v0); v0 = 1, ell = 1 gives -(2n + 1.381966...) i
    model = hwm.build_model(0.0, 3.0, 1.0, 1)
    geom = hwm.build_slice(model)
    model, geom = hwm.normalize(model, geom)
    pen = hws.discretize(hwm.reduce_pencil(model, geom), 96, "collocation")
    om = hws.resonances(pen).converged_omegas()
    h_minus = 1.5 - np.sqrt(2.25 - 1.0)
    for n in range(3):
        target = -1j * (2.0 * n + 1.0 + h_minus)
        assert np.min(np.abs(om - target)) < 1e-6


def test_resonances_converged_and_symmetric(pencil96):
    res = hws.resonances(pencil96)
    om = res.converged_omegas()
    assert len(om) >= 5
    # modes come in +/- mirror pairs about the imaginary axis
    for w in om[np.abs(om.real) > 1e-8]:
        assert np.min(np.abs(om - (-np.conj(w)))) < 1e-8
    # fundamental pair sits closest to the real axis
    top = om[np.argmax(om.imag)]
    assert abs(abs(top.real) - 0.4371069) < 1e-5
    assert abs(top.imag + 0.0768540) < 1e-5


def test_polish_agrees_with_eigenvalue_seed(coeffs):
    pen = hws.discretize(coeffs, 96, "collocation")
    res = hws.resonances(pen)
    om = res.converged_omegas()
    w0 = om[np.argmax(om.imag)]
    polished, mis, ok = hws.polish_resonance(coeffs, w0 + 1e-4)
    assert ok and mis < 1e-8
    assert abs(polished - w0) < 1e-8


def test_resolvent_norm_peaks_near_resonance(pencil96):
    res = hws.resonances(pencil96)
    om = res.converged_omegas()
    w0 = om[np.argmax(om.imag)]
    near = hws.resolvent_norm(pencil96, complex(w0.real, 0.0))
    far = hws.resolvent_norm(pencil96, complex(w0.real + 1.5, 0.0))
    assert near > far > 0.0


def test_greens_identity_real_data_exact(pencil96):
    u = np.exp(-10.0 * (pencil96.nodes_x - 0.4) ** 2)
    assert hws.greens_identity_residual(pencil96, u, z=0.0) < 1e-12


def _bump(x, c, w):
    s = (x - c) / w
    inside = np.abs(s) < 1.0
    return np.where(inside, np.exp(-1.0 / np.maximum(1.0 - s**2, 1e-300)), 0.0)


def test_selfadjointness_residual_shrinks(coeffs):
    # weak-form asymmetry for interior-supported smooth data decays with
    # resolution (data touching the boundary picks up a boundary term)
    resid = []
    for n in (96, 192):
        pen = hws.discretize(coeffs, n, "collocation")
        x = pen.nodes_x
        u = _bump(x, 0.45, 0.25)
        v = _bump(x, 0.6, 0.3) * np.sin(3.0 * x)
        resid.append(hws.selfadjointness_residual(pen, 0.8, u, v))
    assert resid[0] < 1e-5
    assert resid[1] < 0.1 * resid[0]


def test_discretize_rejects_bad_input(coeffs):
    with pytest.raises(hws.DiscretizationError):
        hws.discretize(coeffs, 4)
    with pytest.raises(hws.DiscretizationError):
        hws.discretize(coeffs, 64, "spectral-element")
