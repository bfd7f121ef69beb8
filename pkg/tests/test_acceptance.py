"""End-to-end acceptance gate for the full pipeline.

Each test exercises one headline property of the package on the baseline
two-horizon configuration (mass 1, lam 0.03, v0 0.1, ell 2) at the stated
tolerance, and asserts it completes inside its runtime budget.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from horizonwave import carleman as hwc
from horizonwave import decay as hwd
from horizonwave import model as hwm
from horizonwave import spectra as hwsp
from horizonwave import symbol as hwsy


BAND = (0.5, 2.0)


@pytest.fixture(scope="module")
def res_collocation(coeffs):
    out = {}
    for n in (128, 256):
        pen = hwsp.discretize(coeffs, n, "collocation")
        out[n] = hwsp.resonances(pen)
    return out


@pytest.fixture(scope="module")
def res_fd4(coeffs):
    pen = hwsp.discretize(coeffs, 256, "finite-difference-4")
    return hwsp.resonances(pen)


@pytest.fixture(scope="module")
def weight_pair(baseline):
    model, geom = baseline
    w1, w2 = hwc.build_interior(model, geom, BAND)
    return hwc.extend_boundary(w1), hwc.extend_boundary(w2)


def _lowest(omegas, count):
    """The ``count`` converged frequencies closest to the real axis."""
    order = np.argsort(-omegas.imag)
    return omegas[order][:count]


def test_criterion_01_symbol_suite(baseline):
    t0 = time.monotonic()
    model, geom = baseline
    rng = np.random.default_rng(11)
    n = 1200
    r = rng.uniform(1e-3, 0.98 * geom.normal.r_total, n)
    p = hwsy.SymbolPoint(r, rng.normal(size=n), rng.normal(size=n),
                         np.abs(rng.normal(size=n)))

    num1 = hwsy.poisson_bracket(lambda q: hwsy.eval_G(model, geom, q),
                                lambda q: q.r, p)
    cf1 = hwsy.bracket_G_r(model, geom, p)
    assert np.max(np.abs(num1 - cf1)) < 1e-8 * max(1.0, np.max(np.abs(cf1)))

    num2 = hwsy.poisson_bracket(lambda q: hwsy.eval_G(model, geom, q),
                                lambda q: hwsy.bracket_G_r(model, geom, q), p)
    cf2 = hwsy.bracket_G_G_r(model, geom, p)
    assert np.max(np.abs(num2 - cf2)) < 1e-8 * max(1.0, np.max(np.abs(cf2)))

    # the model bracket is exactly -2 (r rho + tau)
    k0 = float(geom.normal.kang(0.0))
    num0 = hwsy.poisson_bracket(lambda q: hwsy.eval_G0(q, k0),
                                lambda q: q.r, p)
    assert np.max(np.abs(num0 + 2.0 * (p.r * p.rho + p.tau))) < 1e-8

    # remainder bounds certify with nonnegative margin at gamma = 0.1
    rr = np.exp(rng.uniform(np.log(1e-4),
                            np.log(0.4 * geom.normal.r_total), 2000))
    pts = [hwsy.SymbolPoint(float(a), float(b), float(c), float(abs(d)))
           for a, b, c, d in zip(rr, rng.normal(size=2000),
                                 rng.normal(size=2000), rng.normal(size=2000))]
    out = hwsy.verify_negligible(model, geom, pts, gamma=0.1)
    assert out["margin"] >= 0.0
    assert time.monotonic() - t0 < 60.0


def test_criterion_02_bernoulli_extension(weight_pair):
    from scipy.integrate import solve_ivp
    t0 = time.monotonic()
    slope, R1, a = -2.0, 0.5, 1.0
    R0 = hwc.bernoulli_breakpoint(slope, R1, a)

    def rhs(r, k):
        return a**2 / (3.0 * r**3 * k) - k / r

    sol = solve_ivp(rhs, (R1, R0), [slope], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    grid = np.linspace(R0, R1, 500)
    err = np.max(np.abs(sol.sol(grid)[0] - hwc.bernoulli_k(slope, R1, a, grid)))
    assert err < 1e-10
    assert abs(hwc._bernoulli_dk(slope, R1, a, np.array([R0]))[0]) < 1e-8

    # assembled mollified slope table satisfies the extension inequality;
    # the Bernoulli zone saturates it exactly, so the slack is measured
    # relative to the size of the cancelling terms
    # the slope table behaves like theta ~ 1/d deep in the collar, so the
    # inequality is checked in its d-scaled form
    # -a^2 + 3 (d theta)^2 + 3 (d theta)(d^2 theta') <= slack on the
    # representable range of collar distances
    for w in weight_pair:
        e = w.extension
        d = np.concatenate([np.geomspace(max(e.R0, 1e-120), 0.9 * w.R1, 400),
                            np.linspace(0.9 * w.R1, w.R1 + w.ext, 400)])
        dth = d * e.theta(d)
        d2dth = (d * d) * e.dtheta(d)
        expr = -e.a**2 + 3.0 * dth**2 + 3.0 * dth * d2dth
        slack = 1e-2 * (e.a**2 + 3.0 * dth**2)
        assert np.all(expr <= slack)
    assert time.monotonic() - t0 < 60.0


def test_criterion_03_hypoellipticity_certificate(weight_pair, baseline):
    t0 = time.monotonic()
    model, geom = baseline
    density = 160
    for w in weight_pair:
        R, _, _, _ = hwc._char_points(w, model, geom, BAND, density)
        assert R.size >= 10_000
        assert hwc.certify_hypoellipticity(w, model, geom, BAND,
                                           density=density) > 0.0
    assert time.monotonic() - t0 < 300.0


def test_criterion_04_pseudoconvexity_certificate(baseline):
    t0 = time.monotonic()
    model, geom = baseline
    cert = hwc.certify_pseudoconvexity(model, geom, seed=0)
    assert cert.c > 0.0

    # analytic identity for the model energy at tau = eta = 0
    rng = np.random.default_rng(13)
    r = rng.uniform(0.1 * cert.R0, cert.R0, 500)
    rho = rng.normal(size=500)
    E0 = hwc.pseudo_energy_model(r, rho, 0.0, 0.0, k0=1.0,
                                 M=cert.M, delta=cert.delta)
    target = cert.delta * cert.M * (r * rho) ** 2
    assert np.max(np.abs(E0 - target)) < 1e-12 * max(1.0, np.max(np.abs(target)))
    assert time.monotonic() - t0 < 300.0


def test_criterion_05_spectral_convergence(res_collocation, res_fd4):
    t0 = time.monotonic()
    low128 = _lowest(res_collocation[128].converged_omegas(), 5)
    om256 = res_collocation[256].converged_omegas()
    assert len(low128) == 5 and len(om256) >= 5
    for w in low128:
        assert np.min(np.abs(om256 - w)) < 1e-6 * max(1.0, abs(w))

    # cross-scheme agreement on the shared converged modes: the two
    # discretizations seed the refinement from different raw spectra, so
    # the comparison set is their intersection, which must cover the
    # modes nearest the real axis
    om_fd = res_fd4.converged_omegas()
    shared = 0
    for w in _lowest(om256, 4):
        d = np.min(np.abs(om_fd - w))
        assert d < 1e-4 * max(1.0, abs(w))
        shared += 1
    assert shared >= 4
    assert time.monotonic() - t0 < 600.0


def test_criterion_06_strip_and_resolvent_growth(pencil96):
    t0 = time.monotonic()
    # real frequencies from 0.5 to 16: more than one decade
    result = hwsp.scan_strip(pencil96, BAND, [1.0, 0.5, 0.25, 0.125])
    assert np.isfinite(result.growth_rate)
    assert result.superlinear_rejected          # RSS ratio below 10
    assert result.strip_free                    # fitted thin region empty
    assert np.isfinite(result.strip_C0)
    assert result.verdict
    assert time.monotonic() - t0 < 1800.0


def test_criterion_07_structural_spectral_facts(res_collocation):
    t0 = time.monotonic()
    om = res_collocation[256].converged_omegas()
    # positive potential: the real axis is clear and every mode decays
    assert np.all(np.abs(om.imag) > 1e-8)
    assert np.max(om.imag) < 0.0

    # switching the potential off at ell = 0 restores the zero mode
    model = hwm.build_model(1.0, 0.03, 0.0, 0, allow_nonpositive_v0=True)
    geom = hwm.build_slice(model)
    model, geom = hwm.normalize(model, geom)
    pen = hwsp.discretize(hwm.reduce_pencil(model, geom), 96, "collocation")
    om0 = hwsp.resonances(pen).converged_omegas()
    assert np.min(np.abs(om0)) < 1e-8
    assert time.monotonic() - t0 < 600.0


def test_criterion_08_greens_formula(coeffs):
    t0 = time.monotonic()
    rng = np.random.default_rng(7)
    pens = {(s, n): hwsp.discretize(coeffs, n, s)
            for s in ("collocation", "finite-difference-4")
            for n in (96, 192)}
    for trial in range(10):
        c = rng.normal(size=4) + 1j * rng.normal(size=4)
        centers = rng.uniform(0.25, 0.75, 4)

        def u_of(x):
            return sum(cj * np.exp(-30.0 * (x - xj) ** 2)
                       for cj, xj in zip(c, centers))

        # 4th-order scheme: N-doubling cuts the residual by ~2^4
        r_coarse = hwsp.greens_identity_residual(
            pens[("finite-difference-4", 96)],
            u_of(pens[("finite-difference-4", 96)].nodes_x), z=1.0)
        r_fine = hwsp.greens_identity_residual(
            pens[("finite-difference-4", 192)],
            u_of(pens[("finite-difference-4", 192)].nodes_x), z=1.0)
        assert r_fine < r_coarse / 8.0
        # collocation: already at round-off for smooth data
        r_spec = hwsp.greens_identity_residual(
            pens[("collocation", 96)],
            u_of(pens[("collocation", 96)].nodes_x), z=1.0)
        assert r_spec < 1e-10

    pen = pens[("collocation", 96)]
    u = np.exp(-12.0 * (pen.nodes_x - 0.45) ** 2)
    assert hwsp.greens_identity_residual(pen, u, z=0.0) < 1e-12
    assert time.monotonic() - t0 < 60.0


def test_criterion_09_generator_and_decay(pencil96, res_collocation):
    t0 = time.monotonic()
    gen = hwd.assemble_generator(pencil96)
    om_gen = gen.eigen_frequencies()

    # every generator eigen-frequency is an eigenvalue of the quadratic
    # pencil (relative smallest-singular-value residual), and the modes
    # nearest the real axis coincide with the refined resonances
    order = np.argsort(-om_gen.imag)
    for w in om_gen[order][:20]:
        assert hwsp._relative_residual(pencil96, w) < 1e-6
    om_ref = res_collocation[128].converged_omegas()
    for w in _lowest(om_ref, 4):
        assert np.min(np.abs(om_gen - w)) < 1e-6 * max(1.0, abs(w))

    # single decaying mode: fitted energy rate 2 Im omega
    v0, v1, om = hwd.project_single_mode(gen)
    traj = hwd.evolve(gen, v0, v1, 60.0)
    rep = hwd.fit_log_decay(traj, tail_fraction=0.5)
    assert 2.0 * rep.exp_rate == pytest.approx(2.0 * om.imag, abs=1e-3)

    # multi-mode smooth data: logarithmic envelope with a finite constant
    x = pencil96.nodes_x
    v0 = np.exp(-40.0 * (x - 0.55) ** 2)
    traj = hwd.evolve(gen, v0, np.zeros_like(v0), 1000.0)
    rep = hwd.fit_log_decay(traj, k=2.0)
    assert np.isfinite(rep.log_constant) and rep.log_constant > 0.0
    assert rep.bounded
    assert time.monotonic() - t0 < 900.0


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[discretization]\nn = 48\n[decay]\nt_final = 50\n")
    bodies = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        for sub in ("qnm", "decay"):
            r = subprocess.run(
                [sys.executable, "-m", "horizonwave.cli", sub,
                 "--config", str(cfg), "--out", str(out), "--seed", "5"],
                capture_output=True)
            assert r.returncode == 0, r.stderr.decode()
        bodies.append(((out / "resonances.csv").read_bytes(),
                       (out / "decay.csv").read_bytes()))
    assert bodies[0] == bodies[1]
