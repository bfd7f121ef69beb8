import numpy as np
import pytest

from horizonwave import symbol as hws
from horizonwave.symbol import SymbolPoint


def _sample_points(geom, n, seed=0, r_lo=1e-3, r_frac=0.95):
    rng = np.random.default_rng(seed)
    rt = geom.normal.r_total
    r = rng.uniform(r_lo, r_frac * rt, n)
    return SymbolPoint(r, rng.normal(size=n), rng.normal(size=n),
                       np.abs(rng.normal(size=n)))


def test_poisson_bracket_polynomial_oracle(baseline):
    # {r^2, rho} = -2r: exercises the differencing machinery alone
    p = SymbolPoint(np.array([0.3, 1.1, 2.5]), np.array([0.2, -1.0, 0.4]),
                    np.array([1.0, 0.5, -0.3]), np.array([0.0, 1.0, 2.0]))
    val = hws.poisson_bracket(lambda q: q.r**2, lambda q: q.rho, p)
    assert np.max(np.abs(val - (-2.0 * p.r))) < 1e-9


def test_dual_metric_homogeneity(baseline):
    model, geom = baseline
    p = _sample_points(geom, 50, seed=1)
    lam = 1.7
    G1 = hws.eval_G(model, geom, p)
    G2 = hws.eval_G(model, geom, p.scaled(lam))
    assert np.max(np.abs(G2 - lam**2 * G1)) < 1e-12 * np.max(np.abs(G2))


def test_model_bracket_exact(baseline):
    # {G0, r} = -2 (r rho + tau) exactly, via differencing of G0
    model, geom = baseline
    k0 = float(geom.normal.kang(0.0))
    p = _sample_points(geom, 40, seed=2)
    num = hws.poisson_bracket(lambda q: hws.eval_G0(q, k0), lambda q: q.r, p)
    assert np.max(np.abs(num + 2.0 * (p.r * p.rho + p.tau))) < 1e-8


def test_closed_form_brackets_match_differencing(baseline):
    model, geom = baseline
    p = _sample_points(geom, 300, seed=3)
    num1 = hws.poisson_bracket(lambda q: hws.eval_G(model, geom, q),
                               lambda q: q.r, p)
    cf1 = hws.bracket_G_r(model, geom, p)
    assert np.max(np.abs(num1 - cf1)) < 1e-8 * max(1.0, np.max(np.abs(cf1)))
    num2 = hws.poisson_bracket(lambda q: hws.eval_G(model, geom, q),
                               lambda q: hws.bracket_G_r(model, geom, q), p)
    cf2 = hws.bracket_G_G_r(model, geom, p)
    assert np.max(np.abs(num2 - cf2)) < 1e-8 * max(1.0, np.max(np.abs(cf2)))


def test_remainders_controlled_toward_horizon(baseline):
    # the first-kind remainder vanishes with the collar radius; the
    # second-kind one stays bounded (it carries an angular term that
    # survives at the horizon and is absorbed by the k eta^2 budget)
    model, geom = baseline
    rho, tau, eta = 0.8, -0.6, 0.5
    rs = np.array([1e-2, 1e-4, 1e-6])
    p = SymbolPoint(rs, rho * np.ones(3), tau * np.ones(3), eta * np.ones(3))
    F = np.abs(hws.remainder_N1(model, geom, p))
    H = np.abs(hws.remainder_N2(model, geom, p))
    assert F[2] < F[1] < F[0]
    assert F[2] < 1e-4
    kang = geom.normal.kang(rs)
    Y = (rs * rho) ** 2 + tau**2
    assert np.all(H <= 100.0 * (Y + kang * eta**2))


def test_negligible_bounds_certify(baseline):
    model, geom = baseline
    rng = np.random.default_rng(4)
    n = 500
    r = np.exp(rng.uniform(np.log(1e-4), np.log(0.4 * geom.normal.r_total), n))
    pts = [SymbolPoint(float(a), float(b), float(c), float(abs(d)))
           for a, b, c, d in zip(r, rng.normal(size=n), rng.normal(size=n),
                                 rng.normal(size=n))]
    out = hws.verify_negligible(model, geom, pts, gamma=0.1)
    assert out["margin"] >= 0.0
    assert out["r_gamma"] > 0.0
    assert np.isfinite(out["C_gamma"])


def test_chart_domain_guard(baseline):
    model, geom = baseline
    bad = SymbolPoint(np.array([geom.normal.r_total * 2.0]),
                      np.array([0.0]), np.array([1.0]), np.array([0.0]))
    with pytest.raises(hws.ChartDomainError):
        hws.eval_G(model, geom, bad)
    with pytest.raises(hws.ChartDomainError):
        SymbolPoint(1.0, 0.0, 1.0, -1.0)
