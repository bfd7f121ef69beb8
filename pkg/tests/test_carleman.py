import numpy as np
import pytest
from scipy.integrate import solve_ivp

from horizonwave import carleman as hwc


# ---------------------------------------------------------------------------
# Bernoulli slope closed form


def test_bernoulli_breakpoint_example():
    # slope -2 at R1 = 0.5 with a = 1: R0 = R1 * exp(1/2 - 3(slope R1/a)^2/2)
    R0 = hwc.bernoulli_breakpoint(-2.0, 0.5, 1.0)
    assert R0 == pytest.approx(0.5 * np.exp(-1.0), rel=1e-12)
    assert -1.0 / (np.sqrt(3.0) * R0) == pytest.approx(-3.1388014907, rel=1e-9)


def test_bernoulli_closed_form_vs_ode():
    # independent oracle: adaptive integration of
    # k' = a^2/(3 r^3 k) - k/r downward from (R1, slope)
    slope, R1, a = -2.0, 0.5, 1.0
    R0 = hwc.bernoulli_breakpoint(slope, R1, a)

    def rhs(r, k):
        return a**2 / (3.0 * r**3 * k) - k / r

    sol = solve_ivp(rhs, (R1, R0), [slope], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    grid = np.linspace(R0, R1, 500)
    err = np.max(np.abs(sol.sol(grid)[0] - hwc.bernoulli_k(slope, R1, a, grid)))
    assert err < 1e-10


def test_bernoulli_critical_slope_at_breakpoint():
    slope, R1, a = -2.0, 0.5, 1.0
    R0 = hwc.bernoulli_breakpoint(slope, R1, a)
    assert abs(hwc._bernoulli_dk(slope, R1, a, np.array([R0]))[0]) < 1e-8
    # k(R0) = -a / (sqrt(3) R0)
    assert hwc.bernoulli_k(slope, R1, a, np.array([R0]))[0] == pytest.approx(
        -a / (np.sqrt(3.0) * R0), rel=1e-12)


def test_bernoulli_domain_guard():
    with pytest.raises(hwc.BernoulliDomainError):
        hwc.bernoulli_k(-2.0, 0.5, 1.0, np.array([0.05]))  # below R0


# ---------------------------------------------------------------------------
# interior profile pair


@pytest.fixture(scope="module")
def weights(baseline):
    model, geom = baseline
    return hwc.build_interior(model, geom, (0.5, 2.0))


@pytest.fixture(scope="module")
def extended(weights, baseline):
    return tuple(hwc.extend_boundary(w) for w in weights)


def test_profile_closure_and_slope_window(weights, baseline):
    model, geom = baseline
    for w in weights:
        assert abs(w.profile.closure_residual()) < 1e-10
        # slope window |phi'(R1)| R1 = ratio * a, ratio > 1
        sl = abs(float(w.dphi(np.array([w.R1]))[0]))
        assert sl * w.R1 > w.a
        assert 3.0 * (sl * w.R1) ** 2 > w.a**2


def test_profiles_cross_between_critical_points(weights):
    w1, w2 = weights
    p1 = w1.profile.critical_point()
    p2 = w2.profile.critical_point()
    assert p2 < p1
    # each critical point lies in its own excluded ball, interior region
    assert w1.in_ball(np.array([p1]))[0]
    assert w2.in_ball(np.array([p2]))[0]
    assert p1 > 1.0 and p2 > 1.0
    # strict ordering: psi2 > psi1 on B1, psi1 > psi2 on B2
    b1 = np.linspace(*w1.balls[0], 101)
    b2 = np.linspace(*w2.balls[0], 101)
    assert np.min(w2.psi(b1) - w1.psi(b1)) > 0.0
    assert np.min(w1.psi(b2) - w2.psi(b2)) > 0.0


def test_collar_convexity(weights):
    for w in weights:
        rr = np.linspace(w.R1, w.R1 + w.ext, 301)
        assert np.min(w.d2phi(rr) + w.dphi(rr) / rr) >= 0.0


def test_extension_slope_table(extended):
    for w in extended:
        e = w.extension
        # theta < 0 and theta' >= 0 through the collar
        d = np.concatenate([np.geomspace(max(e.R0, 1e-290), w.R1 * 0.99, 200),
                            np.linspace(0.5 * w.R1, w.R1, 200)])
        assert np.max(e.theta(d)) < 0.0
        assert np.min(e.dtheta(np.linspace(e.w_lo, w.R1, 400))) > \
            -1e-3 * abs(e.slope) / w.R1
        # C^1 splice onto the critical Bernoulli slope at the breakpoint
        assert e.theta(np.array([e.R0]))[0] == pytest.approx(e.k_R0, rel=1e-10)
        # weight continuity across the mollification window
        for dd in (e.w_lo, e.w_hi):
            left = e.phi(np.array([dd * (1 - 1e-9)]))[0]
            right = e.phi(np.array([dd * (1 + 1e-9)]))[0]
            assert left == pytest.approx(right, rel=1e-6)


def test_extension_matches_interior_outside_collar(extended):
    for w in extended:
        r = np.linspace(w.R1 + w.ext + 0.1, 0.5 * w.r_total, 50)
        assert np.max(np.abs(w.phi(r) - np.exp(w.alpha * w.psi(r)))) \
            < 1e-12 * np.max(w.phi(r))


def test_hypoellipticity_margin_positive(extended, baseline):
    model, geom = baseline
    for w in extended:
        assert hwc.certify_hypoellipticity(w, model, geom, (0.5, 2.0),
                                           density=48) > 0.0


# ---------------------------------------------------------------------------
# pseudoconvexity


def test_pseudoconvexity_certificate(baseline):
    model, geom = baseline
    cert = hwc.certify_pseudoconvexity(model, geom, seed=0)
    assert cert.c > 0.0
    assert cert.n_samples > 0
    assert 0.0 < cert.delta < 1.0


def test_model_energy_identity():
    # at tau = eta = 0 the model energy form collapses to delta M (r rho)^2
    rng = np.random.default_rng(5)
    r = rng.uniform(0.01, 0.25, 200)
    rho = rng.normal(size=200)
    for M, delta in ((1.0, 0.45), (8.0, 0.1)):
        E = hwc.pseudo_energy_model(r, rho, 0.0, 0.0, k0=1.0, M=M, delta=delta)
        assert np.max(np.abs(E - delta * M * (r * rho) ** 2)) \
            < 1e-12 * max(1.0, np.max(np.abs(E)))


# ---------------------------------------------------------------------------
# multiplier identity


def test_multiplier_identity_fourth_order(baseline):
    model, geom = baseline

    def u(rt):
        span = geom.rt_hi - geom.rt_lo
        s = (rt - 0.5 * (geom.rt_lo + geom.rt_hi)) / (0.25 * span)
        return np.where(np.abs(s) < 1.0,
                        np.exp(-1.0 / np.maximum(1.0 - s**2, 1e-300)), 0.0)

    r1 = hwc.verify_multiplier_identity(model, geom, u, sigma=0.7, n=401)
    r2 = hwc.verify_multiplier_identity(model, geom, u, sigma=0.7, n=801)
    assert r2 < r1 / 8.0


def test_modified_potential_finite(baseline):
    model, geom = baseline
    V = hwc.modified_potential(model, geom, C=2.0, h=0.1,
                               r_values=np.linspace(0.3, 0.9, 5))
    assert np.all(np.isfinite(V))
