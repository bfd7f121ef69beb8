"""Schwarzschild-de Sitter type model family and its reduction to a
one-dimensional frequency-quadratic operator pencil.

The spacetime metric is g = f dt^2 - f^{-1} drt^2 - rt^2 dOmega^2 with
f(rt) = 1 - 2M/rt - Lambda rt^2/3, rt the area radius.  A horizon-penetrating
time function t_* = t - h(rt) with f h' = -w brings the metric to the regular
form

    g = f dt_*^2 - 2 w dt_* drt - q drt^2 - rt^2 dOmega^2,

where w is a smooth interpolant with w = +1 at the event horizon and w = -1
at the cosmological horizon, and q = (1 - w^2)/f extends smoothly across the
horizons.  The 2x2 (t_*, rt) block has determinant -1, so the volume density
is simply rt^2 drt dOmega and the lapse is A = q^{-1/2}.
"""

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq


class ModelError(ValueError):
    """Inadmissible model parameters (extremal, naked, or out of range)."""


class SlicingError(RuntimeError):
    """The constructed slice failed to be spacelike."""


# ---------------------------------------------------------------------------
# model family


@dataclass(frozen=True)
class ModelSpec:
    """Spherically symmetric model with constant stationary potential.

    ``horizons`` are the positive simple roots of f in increasing order;
    ``kappas`` the corresponding surface gravities |f'|/2.  ``freq_scale``
    is 2*kappa of the designated horizon once :func:`normalize` has run
    (resonances in original units are freq_scale times normalized ones);
    it is 1.0 on a freshly built model.
    """

    mass: float
    lam: float
    v0: float
    ell: int
    horizons: tuple
    kappas: tuple
    designated: int = 0
    freq_scale: float = 1.0
    normalized: bool = False

    def f(self, rt):
        rt = np.asarray(rt, dtype=float)
        if self.mass == 0.0:
            return 1.0 - self.lam * rt**2 / 3.0
        return 1.0 - 2.0 * self.mass / rt - self.lam * rt**2 / 3.0

    def df(self, rt):
        rt = np.asarray(rt, dtype=float)
        if self.mass == 0.0:
            return -2.0 * self.lam * rt / 3.0
        return 2.0 * self.mass / rt**2 - 2.0 * self.lam * rt / 3.0

    @property
    def kappa_designated(self):
        return self.kappas[self.designated]

    @property
    def rt_min(self):
        return 0.0 if self.mass == 0.0 else self.horizons[0]

    @property
    def rt_max(self):
        return self.horizons[-1]


def build_model(mass, lam, v0, ell, allow_nonpositive_v0=False):
    """Build a model, locating horizons and surface gravities.

    Requires lam > 0, v0 > 0, ell >= 0 and either mass = 0 (pure de Sitter)
    or 9*lam*mass^2 < 1 (two distinct non-degenerate horizons).  Setting
    ``allow_nonpositive_v0`` admits v0 <= 0 for control experiments (the
    zero-mode run); the decay hypotheses then fail by design.
    """
    if lam <= 0.0:
        raise ModelError(f"cosmological constant must be positive, got {lam}")
    if v0 <= 0.0 and not allow_nonpositive_v0:
        raise ModelError(f"potential must be strictly positive, got {v0}")
    if mass < 0.0:
        raise ModelError(f"mass must be non-negative, got {mass}")
    if not (isinstance(ell, (int, np.integer)) and ell >= 0):
        raise ModelError(f"angular mode must be a non-negative integer, got {ell}")

    if mass == 0.0:
        rc = np.sqrt(3.0 / lam)
        horizons = (rc,)
        kappas = (abs(-2.0 * lam * rc / 3.0) / 2.0,)
    else:
        if 9.0 * lam * mass**2 >= 1.0:
            raise ModelError(
                f"extremal or naked configuration: 9*Lambda*M^2 = {9 * lam * mass ** 2:.6g} >= 1"
            )
        # roots of rt*f(rt) = -(lam/3) rt^3 + rt - 2M
        roots = np.roots([-lam / 3.0, 0.0, 1.0, -2.0 * mass])
        pos = np.sort(roots[(np.abs(roots.imag) < 1e-12) & (roots.real > 0)].real)
        if len(pos) != 2:
            raise ModelError("failed to locate two positive horizon radii")
        # polish with bisection on f itself
        def _f(rt):
            return 1.0 - 2.0 * mass / rt - lam * rt**2 / 3.0

        r_e = brentq(_f, 0.999 * pos[0], 1.001 * pos[0], xtol=1e-15, rtol=1e-15)
        r_c = brentq(_f, 0.999 * pos[1], 1.001 * pos[1], xtol=1e-15, rtol=1e-15)
        df = lambda rt: 2.0 * mass / rt**2 - 2.0 * lam * rt / 3.0
        horizons = (r_e, r_c)
        kappas = (abs(df(r_e)) / 2.0, abs(df(r_c)) / 2.0)
    if any(k <= 0.0 for k in kappas):
        raise ModelError("degenerate horizon: vanishing surface gravity")
    return ModelSpec(mass=float(mass), lam=float(lam), v0=float(v0), ell=int(ell),
                     horizons=horizons, kappas=kappas)


# ---------------------------------------------------------------------------
# slicing


def _interp_w(model):
    """Smooth interpolant w(rt) with w = +1 at the event horizon and
    w = -1 at the cosmological one (w = -rt/rc for pure de Sitter)."""
    if model.mass == 0.0:
        rc = model.horizons[0]
        return (lambda rt: -np.asarray(rt) / rc,
                lambda rt: np.full_like(np.asarray(rt, dtype=float), -1.0 / rc))
    r_e, r_c = model.horizons
    span = r_c - r_e
    return (lambda rt: (r_e + r_c - 2.0 * np.asarray(rt)) / span,
            lambda rt: np.full_like(np.asarray(rt, dtype=float), -2.0 / span))


def _interp_q(model):
    """q = (1 - w^2)/f in a form smooth across the horizons."""
    if model.mass == 0.0:
        one = lambda rt: np.ones_like(np.asarray(rt, dtype=float))
        zero = lambda rt: np.zeros_like(np.asarray(rt, dtype=float))
        return one, zero
    r_e, r_c = model.horizons
    r_n = -(r_e + r_c)
    c0 = 12.0 / (model.lam * (r_c - r_e) ** 2)

    def q(rt):
        rt = np.asarray(rt, dtype=float)
        return c0 * rt / (rt - r_n)

    def dq(rt):
        rt = np.asarray(rt, dtype=float)
        return -c0 * r_n / (rt - r_n) ** 2

    return q, dq


@dataclass(frozen=True)
class NormalForm:
    """Normalized collar geometry anchored at the designated horizon.

    ``r`` is the arc length from the designated horizon with respect to the
    conformally rescaled induced metric, so that the lapse is identically 1,
    the designated surface gravity is 1/2 and G(dr) = -r + O(r^2) there.
    All callables are vectorized in r.
    """

    model: ModelSpec
    scale: float            # 2*kappa of the designated horizon
    sigma: float            # +1 if r increases with rt, else -1
    rt_anchor: float        # area radius of the designated horizon
    r_total: float          # arc length of the full slice

    def _q_w(self):
        return _interp_q(self.model), _interp_w(self.model)

    def r_of_rt(self, rt):
        rt = np.asarray(rt, dtype=float)
        m = self.model
        if m.mass == 0.0:
            return self.scale * (m.horizons[0] - rt)
        r_e, r_c = m.horizons
        r_n = -(r_e + r_c)
        c0 = 12.0 / (m.lam * (r_c - r_e) ** 2)
        prim = lambda u: u + r_n * np.log(u - r_n)
        if self.sigma > 0:
            return self.scale * c0 * (prim(rt) - prim(r_e))
        return self.scale * c0 * (prim(r_c) - prim(rt))

    def rt_of_r(self, r):
        r = np.asarray(r, dtype=float)
        m = self.model
        if m.mass == 0.0:
            return m.horizons[0] - r / self.scale
        (q, _), _ = self._q_w()
        lo, hi = m.horizons
        rt = np.full(np.shape(r), 0.5 * (lo + hi))
        # Newton on the closed-form arc length; monotone, safeguarded
        for _ in range(60):
            res = self.r_of_rt(rt) - r
            step = res / (self.sigma * self.scale * q(rt))
            rt_new = np.clip(rt - step, lo, hi)
            if np.max(np.abs(rt_new - rt)) < 1e-15 * max(hi, 1.0):
                rt = rt_new
                break
            rt = rt_new
        return rt

    # collar coefficient functions --------------------------------------

    def shift(self, r):
        """Radial shift component W^r of the normalized metric (equals 1
        at the designated horizon, where it matches the unit lapse)."""
        rt = self.rt_of_r(r)
        (_, _), (w, _) = self._q_w()
        return self.sigma * w(rt)

    def dshift(self, r):
        rt = self.rt_of_r(r)
        (q, _), (_, dw) = self._q_w()
        return dw(rt) / (self.scale * q(rt))

    def kang(self, r):
        """Coefficient of eta^2 in the dual metric (angular block)."""
        rt = self.rt_of_r(r)
        (q, _), _ = self._q_w()
        return 1.0 / (self.scale**2 * q(rt) * rt**2)

    def dkang(self, r):
        rt = self.rt_of_r(r)
        (q, dq), _ = self._q_w()
        mval = self.scale**2 * q(rt) * rt**2
        dm_drt = self.scale**2 * (dq(rt) * rt**2 + 2.0 * q(rt) * rt)
        drt_dr = self.sigma / (self.scale * q(rt))
        return -dm_drt * drt_dr / mval**2

    def G_dr(self, r):
        """Value of the dual metric on dr; equals -(1 - w^2)."""
        rt = self.rt_of_r(r)
        _, (w, _) = self._q_w()
        return -(1.0 - w(rt) ** 2)


@dataclass(frozen=True)
class SliceGeometry:
    """Horizon-penetrating spacelike slice in the chart x in [0, 1].

    The chart is affine in the area radius.  ``conformal`` is the conformal
    factor applied by :func:`normalize` (1.0 before); ``normal`` holds the
    collar normal form and is populated by :func:`normalize`.
    """

    model: ModelSpec
    rt_lo: float
    rt_hi: float
    collar_cap: float = 0.4
    conformal_applied: bool = False
    normal: NormalForm | None = None

    def rt_of_x(self, x):
        return self.rt_lo + (self.rt_hi - self.rt_lo) * np.asarray(x, dtype=float)

    def x_of_rt(self, rt):
        return (np.asarray(rt, dtype=float) - self.rt_lo) / (self.rt_hi - self.rt_lo)

    def lapse(self, x):
        q, _ = _interp_q(self.model)
        return 1.0 / np.sqrt(q(self.rt_of_x(x)))

    def shift_rt(self, x):
        """Shift component W^rt in the (t_*, rt) chart."""
        rt = self.rt_of_x(x)
        q, _ = _interp_q(self.model)
        w, _ = _interp_w(self.model)
        return w(rt) / q(rt)

    def k_rr(self, x):
        q, _ = _interp_q(self.model)
        return q(self.rt_of_x(x))

    def k_sphere(self, x):
        return self.rt_of_x(x) ** 2

    def mu(self, x):
        return self.model.f(self.rt_of_x(x))

    def conformal(self, x):
        if not self.conformal_applied:
            return np.ones_like(np.asarray(x, dtype=float))
        s = self.model.freq_scale
        return self.lapse(x) ** 2 / s**2

    def _arclength_from(self, rt0, rt, sign):
        """Base-metric distance from rt0 towards rt (sign = orientation)."""
        q, _ = _interp_q(self.model)
        rt = np.asarray(rt, dtype=float)
        nodes, wts = np.polynomial.legendre.leggauss(48)

        def one(rr):
            a, b = (rt0, rr) if sign > 0 else (rr, rt0)
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            return half * np.sum(wts * np.sqrt(q(mid + half * nodes)))

        return np.vectorize(one)(rt)

    def r_left(self, x):
        """Base-metric distance to the inner boundary, capped on the collar."""
        rt = self.rt_of_x(x)
        d = self._arclength_from(self.rt_lo, rt, +1)
        cap = self.collar_cap * self._arclength_from(self.rt_lo, self.rt_hi, +1)
        return np.minimum(d, cap)

    def r_right(self, x):
        rt = self.rt_of_x(x)
        d = self._arclength_from(self.rt_hi, rt, -1)
        cap = self.collar_cap * self._arclength_from(self.rt_lo, self.rt_hi, +1)
        return np.minimum(d, cap)

    def export_rows(self, x):
        """Rows for CSV export: x, rt, A, W, k_rr, k_sphere, r_left, r_right,
        conformal."""
        x = np.asarray(x, dtype=float)
        return np.column_stack([
            x, self.rt_of_x(x), self.lapse(x), self.shift_rt(x),
            self.k_rr(x), self.k_sphere(x), self.r_left(x), self.r_right(x),
            self.conformal(x),
        ])


def build_slice(model):
    """Construct the horizon-penetrating slice for a model.

    The slice is the level set t_* = const of the height function with
    f h' = -w; spacelikeness amounts to q = (1 - w^2)/f > 0, which holds
    on the whole closed slice for the interpolants used here and is
    verified on a dense grid.
    """
    if model.mass == 0.0:
        rt_lo, rt_hi = 0.0, model.horizons[0]
    else:
        rt_lo, rt_hi = model.horizons
    geom = SliceGeometry(model=model, rt_lo=rt_lo, rt_hi=rt_hi)
    q, _ = _interp_q(model)
    xs = np.linspace(0.0, 1.0, 2001)
    rts = geom.rt_of_x(xs)
    rts = rts[rts > 1e-12]  # induced metric degenerates only at a regular centre
    qv = q(rts)
    if np.any(qv <= 0.0):
        bad = rts[np.argmin(qv)]
        raise SlicingError(f"slice fails to be spacelike at rt = {bad:.6g}")
    return geom


def normalize(model, geom, designated="event"):
    """Rescale time so the designated surface gravity becomes 1/2 and apply
    the conformal change making the lapse 1 (hence G(dr) = -r + O(r^2) at
    the designated horizon).  Idempotent on already normalized input.

    Returns a (model, slice) pair; ``model.freq_scale`` records 2*kappa so
    resonances can be mapped back to original units, and ``slice.normal``
    carries the collar normal form.
    """
    if model.normalized and geom.normal is not None:
        return model, geom
    if model.mass == 0.0 or designated == "cosmological":
        idx = len(model.horizons) - 1
        sigma = -1.0
        rt_anchor = model.horizons[-1]
    else:
        idx = 0
        sigma = +1.0
        rt_anchor = model.horizons[0]
    scale = 2.0 * model.kappas[idx]
    model2 = replace(model, designated=idx, freq_scale=scale, normalized=True)
    nf = NormalForm(model=model2, scale=scale, sigma=sigma, rt_anchor=rt_anchor,
                    r_total=np.nan)
    if model.mass == 0.0:
        r_total = float(nf.r_of_rt(0.0))
    else:
        other = model.horizons[1] if idx == 0 else model.horizons[0]
        r_total = float(nf.r_of_rt(other))
    nf = replace(nf, model=model2, r_total=r_total)
    geom2 = replace(geom, model=model2, conformal_applied=True, normal=nf)
    return model2, geom2


# ---------------------------------------------------------------------------
# pencil reduction


@dataclass(frozen=True)
class PencilCoefficients:
    """Coefficients of P(omega) = P0 + omega P1 + omega^2 P2 on the chart.

    P0 is second order, P1 first order (times i), P2 a multiplication by
    -A^{-2}.  Coefficients are given as functions of the area radius;
    frequencies are in the original (un-rescaled) time units, and
    ``freq_scale`` maps to the kappa = 1/2 normalized units
    (omega_normalized = omega / freq_scale).
    """

    model: ModelSpec
    geom: SliceGeometry
    freq_scale: float

    # P0 u = a2 u'' + a1 u' + a0 u   (primes are d/drt)
    def a2(self, rt):
        return -self.model.f(rt)

    def a1(self, rt):
        rt = np.asarray(rt, dtype=float)
        return -(self.model.df(rt) + 2.0 * self.model.f(rt) / rt)

    def a0(self, rt):
        rt = np.asarray(rt, dtype=float)
        ell = self.model.ell
        return ell * (ell + 1.0) / rt**2 + self.model.v0

    # P1 u = i (b1 u' + b0 u)
    def b1(self, rt):
        w, _ = _interp_w(self.model)
        return 2.0 * w(rt)

    def b0(self, rt):
        rt = np.asarray(rt, dtype=float)
        w, dw = _interp_w(self.model)
        return dw(rt) + 2.0 * w(rt) / rt

    # P2 u = c0 u
    def c0(self, rt):
        q, _ = _interp_q(self.model)
        return -q(rt)

    def density(self, rt):
        """Weight of the L^2 pairing: A dS_X reduces to rt^2 drt."""
        return np.asarray(rt, dtype=float) ** 2

    def quadratic_symbol(self, rt, xi, omega):
        """Full symbol a2*(i xi)^2 + ... ; equals -G(xi drt - omega dt)."""
        p0 = -self.a2(rt) * xi**2 + 1j * self.a1(rt) * xi + self.a0(rt)
        p1 = 1j * (1j * self.b1(rt) * xi + self.b0(rt))
        return p0 + omega * p1 + omega**2 * self.c0(rt)


def reduce_pencil(model, geom):
    """Reduce L = Box_g + v0 on the slice to the mode-ell pencil.

    Requires a normalized model/slice pair (see :func:`normalize`); the
    pencil itself is expressed in original frequency units with the
    normalization factor recorded.
    """
    if not model.normalized:
        raise ModelError("reduce_pencil expects a normalized model; call normalize()")
    return PencilCoefficients(model=model, geom=geom, freq_scale=model.freq_scale)


# short alias
reduce = reduce_pencil
