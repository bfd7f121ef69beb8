"""Carleman weights near the horizons and sampled certificates.

Two exponentiated Morse-type interior weights are built on the normalized
collar coordinate, extended toward the boundary through the Bernoulli
closed form and a mollified slope table, and the symbol-level hypotheses
behind the Carleman estimates are certified by dense sampling:
Hormander bracket positivity on the characteristic set of the conjugated
symbol, and the pseudoconvexity inequality for the boundary multiplier.
The covariant multiplier identity itself is verified on a grid.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import symbol
from .model import _interp_q, _interp_w


class CarlemanConstructionError(RuntimeError):
    pass


class AlphaSearchError(CarlemanConstructionError):
    """No amplification up to the cap satisfies all positivity conditions."""


class EpsilonSearchError(CarlemanConstructionError):
    """Mollification width search exhausted."""


class BernoulliDomainError(ValueError):
    """Radius below the Bernoulli breakpoint (negative radicand)."""


class CertificationError(RuntimeError):
    """A sampled certificate failed; carries the offending point."""


# ---------------------------------------------------------------------------
# polynomial smoothstep (C^3) and bump mollifier


def _sstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)


def _dsstep(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 140.0 * tc**3 * (1.0 - tc) ** 3, 0.0)


def _d2sstep(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 420.0 * tc**2 * (1.0 - tc) ** 2 * (1.0 - 2.0 * tc), 0.0)


def _isstep(t):
    """Antiderivative of the smoothstep with value 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    base = tc**5 * (7.0 - 14.0 * tc + 10.0 * tc**2 - 2.5 * tc**3)
    return base + np.maximum(t - 1.0, 0.0)


def _bump(s):
    """Polynomial mollifier c(1-s^2)^4 on (-1,1), unit integral."""
    s = np.asarray(s, dtype=float)
    out = np.where(np.abs(s) < 1.0, (1.0 - s**2) ** 4, 0.0)
    return (315.0 / 256.0) * out


def _dbump(s):
    s = np.asarray(s, dtype=float)
    return (315.0 / 256.0) * np.where(np.abs(s) < 1.0,
                                      -8.0 * s * (1.0 - s**2) ** 3, 0.0)


# ---------------------------------------------------------------------------
# interior Morse profiles


@dataclass(frozen=True)
class InteriorProfile:
    """Smooth profile psi with a single non-degenerate interior critical
    point of the collar-anchored weight.

    psi(r) = c0 + eps_d * int_0^r S, where the slope shape S starts at -1
    (so psi descends linearly away from the designated collar), is modified
    by a sequence of smoothstep ``steps`` (jump, T, L), crosses zero exactly
    once in the interior, and ends at +chi so that psi rejoins the far
    collar line.  A negative jump steepens the descent; the closure
    condition int_0^r_total S = 0 makes the two collar lines meet at equal
    height c0.
    """

    c0: float
    eps_d: float            # magnitude of the designated-collar slope
    r_total: float
    steps: tuple            # ((jump, T, L), ...) smoothstep slope changes

    def shape(self, r):
        """Slope shape S(r) = psi'(r)/eps_d."""
        r = np.asarray(r, dtype=float)
        out = -np.ones_like(r)
        for jump, T, L in self.steps:
            out = out + jump * _sstep((r - T) / L)
        return out

    def dshape(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for jump, T, L in self.steps:
            out = out + jump * _dsstep((r - T) / L) / L
        return out

    def ishape(self, r):
        """Antiderivative of the shape with value 0 at r = 0."""
        r = np.asarray(r, dtype=float)
        out = -r
        for jump, T, L in self.steps:
            out = out + jump * L * _isstep((r - T) / L)
        return out

    def psi(self, r):
        return self.c0 + self.eps_d * self.ishape(r)

    def dpsi(self, r):
        return self.eps_d * self.shape(r)

    def d2psi(self, r):
        return self.eps_d * self.dshape(r)

    def closure_residual(self):
        """int_0^r_total S; zero when the collar lines meet at equal c0."""
        return float(self.ishape(np.array([self.r_total]))[0])

    def critical_point(self):
        """Location of the single interior zero crossing of the slope."""
        lo = min(T for _, T, _ in self.steps)
        far_T = max(T for _, T, _ in self.steps)
        return brentq(lambda r: float(self.shape(np.array([r]))[0]),
                      lo, far_T, xtol=1e-13)


# ---------------------------------------------------------------------------
# Bernoulli closed form


def bernoulli_k(slope, R1, a, r):
    """Closed-form solution k(r) of  -a^2/r + 3 r k^2 + 3 r^2 k k' = 0
    with k(R1) = slope < 0, valid for r in [R0, R1]."""
    if slope >= 0.0:
        raise ValueError("boundary slope must be negative")
    if 3.0 * (slope * R1) ** 2 <= a**2:
        raise ValueError("amplification condition 3(slope*R1)^2 > a^2 violated")
    r = np.asarray(r, dtype=float)
    radicand = (slope * R1) ** 2 + (2.0 / 3.0) * a**2 * np.log(r / R1)
    if np.any(radicand < 0.0):
        raise BernoulliDomainError("radius below the Bernoulli breakpoint")
    return -np.sqrt(radicand) / r


def bernoulli_breakpoint(slope, R1, a):
    """R0 = R1 exp(1/2 - (3/2)(slope*R1/a)^2), where k'(R0) = 0."""
    return R1 * np.exp(0.5 - 1.5 * (slope * R1 / a) ** 2)


def _bernoulli_dk(slope, R1, a, r):
    r = np.asarray(r, dtype=float)
    m = (slope * R1) ** 2 + (2.0 / 3.0) * a**2 * np.log(r / R1)
    # k = -sqrt(m)/r ; k' = -m'/(2 sqrt(m) r) + sqrt(m)/r^2,  m' = (2/3)a^2/r
    return -a**2 / (3.0 * r**2 * np.sqrt(m)) + np.sqrt(m) / r**2


# ---------------------------------------------------------------------------
# assembled weight


@dataclass(frozen=True)
class BoundaryExtension:
    """Piecewise slope table theta_eps on the collar variable d in
    [0, R1+ext] and the integrated weight profile.

    Below the Bernoulli breakpoint R0 the slope is frozen at k(R0) (the
    splice there is C^1 because k'(R0) = 0 exactly); on [R0, window] it is
    the Bernoulli closed form; across the slope kink at R1 it is a
    mollified numeric table; beyond the window it is the interior collar
    slope.  The breakpoint can be exponentially small, so the Bernoulli
    piece and its antiderivative are kept in closed form instead of being
    tabulated.
    """

    R1: float
    R0: float
    r1: float
    ext: float
    eps: float
    a: float
    slope: float                 # interior phi'(R1)
    al_eps: float                # alpha * eps_d of the interior collar form
    ln_phi0: float               # alpha * c0; interior phi = exp(ln_phi0 - al_eps d)
    w_lo: float                  # mollification window
    w_hi: float
    theta_spline: object         # slope table on [w_lo, w_hi]
    phi_spline: object           # its antiderivative, anchored at w_hi
    check_margin: float

    def _radicand(self, d):
        return ((self.slope * self.R1) ** 2
                + (2.0 / 3.0) * self.a**2 * np.log(d / self.R1))

    @property
    def k_R0(self):
        return -self.a / (np.sqrt(3.0) * self.R0)

    def theta(self, d):
        d = np.asarray(d, dtype=float)
        dc = np.clip(d, 0.0, self.R1 + self.ext)
        out = np.empty_like(dc)
        lo = dc <= self.R0
        bern = (dc > self.R0) & (dc < self.w_lo)
        win = (dc >= self.w_lo) & (dc <= self.w_hi)
        top = dc > self.w_hi
        out[lo] = self.k_R0
        if np.any(bern):
            out[bern] = -np.sqrt(self._radicand(dc[bern])) / dc[bern]
        if np.any(win):
            out[win] = self.theta_spline(dc[win])
        if np.any(top):
            out[top] = -self.al_eps * np.exp(self.ln_phi0
                                             - self.al_eps * dc[top])
        return out

    def dtheta(self, d):
        d = np.asarray(d, dtype=float)
        dc = np.clip(d, 0.0, self.R1 + self.ext)
        out = np.zeros_like(dc)
        bern = (dc > self.R0) & (dc < self.w_lo)
        win = (dc >= self.w_lo) & (dc <= self.w_hi)
        top = dc > self.w_hi
        if np.any(bern):
            m = self._radicand(dc[bern])
            out[bern] = (-self.a**2 / (3.0 * dc[bern] ** 2 * np.sqrt(m))
                         + np.sqrt(m) / dc[bern] ** 2)
        if np.any(win):
            out[win] = self.theta_spline(dc[win], 1)
        if np.any(top):
            out[top] = self.al_eps**2 * np.exp(self.ln_phi0
                                               - self.al_eps * dc[top])
        return out

    def phi(self, d):
        d = np.asarray(d, dtype=float)
        dc = np.clip(d, 0.0, self.R1 + self.ext)
        out = np.empty_like(dc)
        lo = dc <= self.R0
        bern = (dc > self.R0) & (dc < self.w_lo)
        win = (dc >= self.w_lo) & (dc <= self.w_hi)
        top = dc > self.w_hi
        phi_wlo = float(self.phi_spline(self.w_lo))
        rad_wlo = self._radicand(self.w_lo)
        if np.any(bern):
            # antiderivative of the Bernoulli slope: -radicand^(3/2)/a^2
            out[bern] = phi_wlo + (rad_wlo**1.5
                                   - self._radicand(dc[bern]) ** 1.5) / self.a**2
        if np.any(lo):
            phi_R0 = phi_wlo + (rad_wlo**1.5 - (self.a**2 / 3.0) ** 1.5) / self.a**2
            out[lo] = phi_R0 + self.k_R0 * (dc[lo] - self.R0)
        if np.any(win):
            out[win] = self.phi_spline(dc[win])
        if np.any(top):
            out[top] = np.exp(self.ln_phi0 - self.al_eps * dc[top])
        return out


@dataclass(frozen=True)
class CarlemanWeight:
    """One of the pair of Carleman weights phi_i = exp(alpha psi_i).

    ``balls`` are the excluded neighborhoods B_i of the critical points of
    psi_i; ``extension`` replaces the weight by the integrated Bernoulli
    slope table within collar distance R1 of the boundary.
    """

    index: int
    model: object
    geom: object
    profile: InteriorProfile
    alpha: float
    a: float
    band: tuple
    R1: float
    ext: float
    chi: float
    r_total: float
    balls: tuple
    extension: BoundaryExtension | None = None

    # collar distance and its radial derivative -----------------------------
    def dist(self, r):
        r = np.asarray(r, dtype=float)
        if self.model.mass == 0.0:
            return r
        return np.minimum(r, self.chi * (self.r_total - r))

    def _ddist(self, r):
        r = np.asarray(r, dtype=float)
        if self.model.mass == 0.0:
            return np.ones_like(r)
        return np.where(r <= self.chi * (self.r_total - r), 1.0, -self.chi)

    def psi(self, r):
        return self.profile.psi(r)

    def dpsi(self, r):
        return self.profile.dpsi(r)

    def d2psi(self, r):
        return self.profile.d2psi(r)

    def _interior_phi(self, r):
        return np.exp(self.alpha * self.profile.psi(r))

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        inner = self._interior_phi(r)
        if self.extension is None:
            return inner
        d = self.dist(r)
        use = d <= self.R1 + self.ext
        return np.where(use, self.extension.phi(d), inner)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.alpha
        inner = a * self.profile.dpsi(r) * self._interior_phi(r)
        if self.extension is None:
            return inner
        d = self.dist(r)
        use = d <= self.R1 + self.ext
        return np.where(use, self.extension.theta(d) * self._ddist(r), inner)

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        a = self.alpha
        ph = self._interior_phi(r)
        inner = (a * self.profile.d2psi(r) + (a * self.profile.dpsi(r)) ** 2) * ph
        if self.extension is None:
            return inner
        d = self.dist(r)
        use = d <= self.R1 + self.ext
        return np.where(use, self.extension.dtheta(d) * self._ddist(r) ** 2, inner)

    def in_ball(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=bool)
        for lo, hi in self.balls:
            out |= (r >= lo) & (r <= hi)
        return out


# ---------------------------------------------------------------------------
# construction


def _collar_data(model, geom):
    nf = getattr(geom, "normal", None)
    if nf is None:
        raise CarlemanConstructionError("normalize the model/slice first")
    if model.mass == 0.0:
        chi = 1.0
    else:
        other = 1 - model.designated
        chi = model.kappas[model.designated] / model.kappas[other]
    return nf, chi


def _interior_margin(w, model, geom, band, density=24):
    """Cheap bracket-positivity probe on the interior branch only."""
    try:
        return certify_hypoellipticity(w, model, geom, band, density,
                                       _interior_only=True)
    except CertificationError:
        return -1.0


def _solve_closure(c0, eps_d, r_total, pre_steps, mid_jump_base, T_mid, L_mid,
                   chi, T2, L2):
    """Solve the mid-plateau level m so the profile closes.

    The profile slope is -1, modified by ``pre_steps``, a rise of
    ``mid_jump_base + m`` at (T_mid, L_mid) onto the plateau level m, and a
    final rise of chi - m at (T2, L2).  Returns the closed profile and m.
    """

    def resid(m):
        steps = pre_steps + ((mid_jump_base + m, T_mid, L_mid),
                             (chi - m, T2, L2))
        return InteriorProfile(c0, eps_d, r_total, steps).closure_residual()

    m = brentq(resid, 1e-6, 2.0, xtol=1e-14)
    steps = pre_steps + ((mid_jump_base + m, T_mid, L_mid), (chi - m, T2, L2))
    return InteriorProfile(c0, eps_d, r_total, steps), m


def _design_pair(model, geom, band, alpha, eps_d, slope_ratio, R1, ext,
                 dip=0.35, L_dip=1.0, L_rise2=0.4, L_rise1=0.8, p1_gap=0.42,
                 L2=0.35, far_gap=0.02):
    """Lay out the two interior profiles for a given amplification.

    Profile 2 steepens its descent just past the collar zone (a dip of the
    slope shape below -1) and turns upward early; profile 1 keeps the
    straight collar slope and turns upward a distance ``p1_gap`` later.
    The dip makes psi2 < psi1 around the early critical point p2 and
    psi2 > psi1 around the late one p1, with a single sign change x_c in
    between; the excluded balls are placed on either side of x_c.
    """
    a_lo, b_hi = band
    nf, chi = _collar_data(model, geom)
    r_total = nf.r_total

    T_dip = R1 + ext + 0.01
    T_rise2 = T_dip + L_dip
    T2 = r_total - (R1 + ext) / chi - L2 - far_gap
    if T_rise2 + L_rise2 >= T2 - p1_gap - L_rise1:
        raise CarlemanConstructionError(
            "collar geometry leaves no room for the interior transitions")

    # level calibration: |phi'(R1)| R1 = slope_ratio * a
    psi_R1 = np.log(slope_ratio * a_lo / (alpha * eps_d * R1)) / alpha
    c0 = psi_R1 + eps_d * R1

    pro2, m2 = _solve_closure(c0, eps_d, r_total, ((-dip, T_dip, L_dip),),
                              1.0 + dip, T_rise2, L_rise2, chi, T2, L2)
    p2 = brentq(lambda r: float(pro2.shape(np.array([r]))[0]),
                T_rise2, T_rise2 + L_rise2, xtol=1e-13)

    # place profile 1 so its critical point sits at p2 + p1_gap
    T1 = p2 + p1_gap - 0.55 * L_rise1
    for _ in range(3):
        pro1, m1 = _solve_closure(c0, eps_d, r_total, (), 1.0, T1, L_rise1,
                                  chi, T2, L2)
        p1 = pro1.critical_point()
        T1 += (p2 + p1_gap) - p1

    def delta(r):
        return float(pro2.psi(np.array([r]))[0] - pro1.psi(np.array([r]))[0])

    if delta(p2) >= 0.0 or delta(p1) <= 0.0:
        raise CarlemanConstructionError(
            "profile pair is not ordered across its critical points")
    x_c = brentq(delta, p2, p1, xtol=1e-12)
    ball2 = (p2 - 0.45, p2 + 0.08)
    ball1 = (x_c + 0.02, p1 + 0.05)
    if x_c < ball2[1] + 0.015 or p1 - ball1[0] < 0.12:
        raise CarlemanConstructionError(
            "profile crossing point leaves no room for the excluded balls")

    w1 = CarlemanWeight(index=1, model=model, geom=geom, profile=pro1,
                        alpha=alpha, a=a_lo, band=tuple(band), R1=R1, ext=ext,
                        chi=chi, r_total=r_total, balls=(ball1,))
    w2 = replace(w1, index=2, profile=pro2, balls=(ball2,))
    return w1, w2


def build_interior(model, geom, band, amplitude=0.35, slope_ratio=21.0,
                   alpha_cap=4096.0, probe_density=24):
    """Construct the pair of interior weights (exponentiated Morse profiles).

    ``band`` = (a, b) is the frequency band of the estimate; its lower
    endpoint is the constant a of the boundary extension.  The
    amplification alpha is found by a doubling search requiring
    3(phi'(R1)R1)^2 > a^2, the collar convexity phi'' >= -phi'/r on
    [R1, R1+1], an overflow guard, and a positive bracket margin on a
    coarse probe of the characteristic set.  The profile amplitude is
    capped at 1/alpha per unit collar length so that the convexity and
    margin conditions are controlled by the scale-free products alpha*psi
    and alpha*psi'.
    """
    a_lo, b_hi = band
    if not (0.0 < a_lo < b_hi):
        raise ValueError("band must satisfy 0 < a < b")
    nf, chi = _collar_data(model, geom)
    r_total = nf.r_total

    R1 = 0.125 * r_total
    ext = 1.0
    if R1 + ext >= 0.45 * r_total:
        raise CarlemanConstructionError("domain too short for the collar zones")

    alpha = 2.0
    rr = np.linspace(R1, R1 + ext, 201)
    last_err = None
    while alpha <= alpha_cap:
        # slightly above 1/(alpha R1) so the collar convexity phi'' >=
        # -phi'/r holds strictly at R1 rather than marginally
        eps_d = min(amplitude / r_total, 1.02 / (alpha * R1))
        psi_R1 = np.log(slope_ratio * a_lo / (alpha * eps_d * R1)) / alpha
        if 3.0 * alpha * (psi_R1 + eps_d * r_total) > 690.0:
            raise AlphaSearchError(
                "amplification exceeds the floating-point overflow guard "
                f"before all conditions hold (alpha = {alpha:g})")
        try:
            w1, w2 = _design_pair(model, geom, band, alpha, eps_d,
                                  slope_ratio, R1, ext)
        except CarlemanConstructionError as err:
            last_err = err
            alpha *= 2.0
            continue
        sl = float(w1.dphi(np.array([R1]))[0])
        cond_slope = 3.0 * (sl * R1) ** 2 > a_lo**2
        convex = w1.d2phi(rr) + w1.dphi(rr) / rr
        cond_convex = bool(np.min(convex) >= 0.0)
        if cond_slope and cond_convex:
            m1 = _interior_margin(w1, model, geom, band, probe_density)
            m2 = _interior_margin(w2, model, geom, band, probe_density)
            if m1 > 0.0 and m2 > 0.0:
                return w1, w2
            last_err = CarlemanConstructionError(
                f"probe margins ({m1:.3g}, {m2:.3g}) not positive")
        alpha *= 2.0
    raise AlphaSearchError(
        f"no amplification up to {alpha_cap:g} certifies the interior pair "
        f"(last failure: {last_err})")


def extend_boundary(w, a=None, delta_rel=1e-3, n_grid=4001, max_halvings=40):
    """Attach the Bernoulli boundary extension to an interior weight.

    Builds the piecewise slope table theta (constant k(R0), Bernoulli
    closed form, interior collar slope), mollifies the derivative kink at
    R1 with the polynomial bump, halving the width eps until
    -a^2/d + 3 d theta_eps^2 + 3 d^2 theta_eps theta_eps' <=
    delta_rel * a^2/d  on the collar, and anchors the antiderivative of
    theta_eps to the interior weight beyond the mollification window.
    """
    if a is None:
        a = w.a
    R1, ext = w.R1, w.ext
    # collar form of the interior weight: psi = c0 - eps_d * d
    c0, eps_d, al = w.profile.c0, w.profile.eps_d, w.alpha
    al_eps = al * eps_d
    ln_phi0 = al * c0
    slope = float(-al_eps * np.exp(ln_phi0 - al_eps * R1))
    R0 = float(bernoulli_breakpoint(slope, R1, a))
    if not (np.isfinite(R0) and R0 > 5e-300 * R1):
        raise CarlemanConstructionError(
            f"Bernoulli breakpoint underflow (R0/R1 = {R0 / R1:.3g}); "
            "amplification too aggressive for a floating-point extension")
    kR0 = -a / (np.sqrt(3.0) * R0)

    def theta_raw(d):
        d = np.asarray(d, dtype=float)
        out = np.empty_like(d)
        mid = d < R1
        hi = ~mid
        if np.any(mid):
            out[mid] = bernoulli_k(slope, R1, a, d[mid])
        out[hi] = -al_eps * np.exp(ln_phi0 - al_eps * d[hi])
        return out

    delta_H = min(ext, R1) / 4.0
    h_lo = R1 - 2.0 * delta_H

    def H(d):
        d = np.asarray(d, dtype=float)
        up = _sstep((d - h_lo) / delta_H)
        down = 1.0 - _sstep((d - (R1 + delta_H)) / delta_H)
        return up * down

    gl_t, gl_w = np.polynomial.legendre.leggauss(32)

    def mollify(d, eps):
        d = np.asarray(d, dtype=float)
        s = d[:, None] - eps * gl_t[None, :]
        vals = H(s) * theta_raw(s)
        return (vals * (_bump(gl_t) * gl_w)[None, :]).sum(axis=1)

    eps = delta_H / 2.0
    margin = None
    for _ in range(max_halvings):
        w_lo, w_hi = h_lo - 1.5 * eps, R1 + 2.0 * delta_H + 1.5 * eps
        dgrid = np.linspace(w_lo, min(w_hi, R1 + ext), n_grid)
        th = (1.0 - H(dgrid)) * theta_raw(dgrid) + mollify(dgrid, eps)
        spl = CubicSpline(dgrid, th)
        dth = spl(dgrid, 1)
        expr = -a**2 / dgrid + 3.0 * dgrid * th**2 + 3.0 * dgrid**2 * th * dth
        # the Bernoulli zone saturates the inequality exactly, so the
        # tolerance must be measured against the size of the canceling
        # terms; the mollification deviation shrinks like eps^2
        target = delta_rel * (a**2 / dgrid + 3.0 * dgrid * th**2)
        margin = float(np.max(expr - target))
        ok = (margin <= 0.0 and np.all(th < 0.0)
              and np.all(dth >= -delta_rel * np.abs(slope) / R1))
        if ok:
            break
        eps *= 0.5
    else:
        raise EpsilonSearchError(
            f"mollification width search exhausted (last margin {margin:.3g})")

    # anchor the antiderivative on the far side of the window, where
    # theta_eps coincides with the interior phi'
    anti = spl.antiderivative()
    phi_anchor = np.exp(ln_phi0 - al_eps * dgrid[-1])
    shiftc = phi_anchor - float(anti(dgrid[-1]))
    phi_spline = CubicSpline(dgrid, anti(dgrid) + shiftc)
    bx = BoundaryExtension(R1=R1, R0=R0, r1=R0, ext=ext, eps=eps, a=a,
                           slope=slope, al_eps=al_eps, ln_phi0=ln_phi0,
                           w_lo=dgrid[0], w_hi=dgrid[-1],
                           theta_spline=spl, phi_spline=phi_spline,
                           check_margin=margin)
    return replace(w, extension=bx)


# ---------------------------------------------------------------------------
# hypoellipticity certificate


def _char_points(w, model, geom, band, density):
    """Sample (r, rho*, tau, eta*) on the characteristic set of G_phi."""
    nf = geom.normal
    a_lo, b_hi = band
    r_floor = 2e-3 * w.r_total
    r_ceil = w.r_total * (1.0 - 2e-3) if model.mass > 0.0 else w.r_total * 0.98
    rs = np.linspace(r_floor, r_ceil, density)
    keep = ~w.in_ball(rs)
    rs = rs[keep]
    n_tau = max(8, density // 3)
    taus = np.concatenate([np.linspace(a_lo, b_hi, n_tau),
                           -np.linspace(a_lo, b_hi, n_tau)])
    R, Tau = np.meshgrid(rs, taus, indexing="ij")
    R, Tau = R.ravel(), Tau.ravel()
    W = nf.shift(R)
    denom = W**2 - 1.0
    # solve Im G_phi = 0 for rho, then Re G_phi = 0 for eta
    rho = W * Tau / denom
    Gdr = nf.G_dr(R)
    dphi = w.dphi(R)
    kang = nf.kang(R)
    keta2 = (Tau - W * rho) ** 2 - rho**2 + dphi**2 * (-Gdr)
    good = keta2 > 0.0
    eta = np.sqrt(np.maximum(keta2, 0.0) / kang)
    return R[good], rho[good], Tau[good], eta[good]


def certify_hypoellipticity(w, model, geom, band, density=128,
                            _interior_only=False):
    """Minimum of {Re G_phi, Im G_phi} over the sampled characteristic set.

    The conjugated symbol is G_phi(p) = G(p + i dphi), so Re G_phi =
    G - G(dphi) and Im G_phi = phi' {G, r}.  Points inside the excluded
    balls B_i are skipped.  Returns the margin, which must be positive;
    raises CertificationError (with the offending point) otherwise.
    """
    nf = geom.normal
    R, rho, tau, eta = _char_points(w, model, geom, band, density)
    if _interior_only:
        d = w.dist(R)
        keep = d > w.R1
        R, rho, tau, eta = R[keep], rho[keep], tau[keep], eta[keep]
    if R.size == 0:
        raise CertificationError("no characteristic samples in the band")
    p = symbol.SymbolPoint(R, rho, tau, eta)

    def re_G_phi(q):
        return (symbol.eval_G(model, geom, q)
                - w.dphi(q.r) ** 2 * nf.G_dr(q.r))

    def im_G_phi(q):
        return w.dphi(q.r) * symbol.dG_drho(model, geom, q)

    br = symbol.poisson_bracket(re_G_phi, im_G_phi, p)
    # scale-free margin: the bracket is homogeneous of degree ~3 in the
    # fiber and carries exp(3 alpha psi); normalize per sample
    scale = (np.abs(w.dphi(R)) * (rho**2 + tau**2 + nf.kang(R) * eta**2)
             + 1e-300)
    margin = br / scale
    i_min = int(np.argmin(margin))
    m = float(margin[i_min])
    if m <= 0.0:
        raise CertificationError(
            f"nonpositive bracket margin {m:.3g} at "
            f"(r, rho, tau, eta) = ({R[i_min]:.4g}, {rho[i_min]:.4g}, "
            f"{tau[i_min]:.4g}, {eta[i_min]:.4g})")
    return m


# ---------------------------------------------------------------------------
# pseudoconvexity certificate


@dataclass(frozen=True)
class PseudoconvexCertificate:
    M: float
    delta: float
    c: float
    R0: float
    worst_point: tuple
    margin: float
    n_samples: int

    def lam(self, r):
        return 0.5 - (1.0 - self.delta) * np.asarray(r, dtype=float) * self.M


def _pseudo_energy(model, geom, r, rho, tau, eta, M, delta):
    lam = 0.5 - (1.0 - delta) * r * M
    p = symbol.SymbolPoint(r, rho, tau, eta)
    bg = symbol.bracket_G_r(model, geom, p)
    bgg = symbol.bracket_G_G_r(model, geom, p)
    G = symbol.eval_G(model, geom, p)
    return 0.25 * (M * bg**2 - bgg - 4.0 * lam * G)


def certify_pseudoconvexity(model, geom, n_r=200, n_dir=64, collar=None,
                            seed=0):
    """Search (M, delta) so that the multiplier energy form is positive.

    Evaluates E = (1/4)(M{G,r}^2 - {G,{G,r}} - 4 lam G) with
    lam = 1/2 - (1-delta) r M on the unit sphere (r rho)^2 + tau^2 +
    kang eta^2 = 1 for r in [0, min((4M)^{-1}, collar)]; degree-2
    homogeneity makes the sphere restriction sufficient.  Returns the
    certificate with c = min E; raises CertificationError listing the best
    attempt when the search fails.
    """
    nf = geom.normal
    if nf is None:
        raise CarlemanConstructionError("normalize the model/slice first")
    if collar is None:
        collar = 0.5 * nf.r_total
    rng = np.random.default_rng(seed)
    # fixed sphere directions (xi, tau, sqrt(kang) eta) with eta >= 0
    n_sphere = n_dir
    v = rng.normal(size=(n_sphere, 3))
    v[:, 2] = np.abs(v[:, 2])
    v /= np.linalg.norm(v, axis=1)[:, None]

    best = None
    for M in [2.0**j for j in range(0, 19)]:
        rmax = min(1.0 / (4.0 * M), collar)
        rs = np.linspace(1e-6 * rmax, rmax, n_r)
        R = np.repeat(rs, n_sphere)
        xi = np.tile(v[:, 0], n_r)
        tau = np.tile(v[:, 1], n_r)
        se = np.tile(v[:, 2], n_r)
        rho = xi / R
        eta = se / np.sqrt(nf.kang(R))
        for delta in (0.45, 0.3, 0.2, 0.1, 0.05, 0.02):
            E = _pseudo_energy(model, geom, R, rho, tau, eta, M, delta)
            i_min = int(np.argmin(E))
            c = float(E[i_min])
            if best is None or c > best[0]:
                best = (c, M, delta, (float(R[i_min]), float(rho[i_min]),
                                      float(tau[i_min]), float(eta[i_min])))
            if c > 0.0:
                return PseudoconvexCertificate(
                    M=M, delta=delta, c=c, R0=rmax,
                    worst_point=(float(R[i_min]), float(rho[i_min]),
                                 float(tau[i_min]), float(eta[i_min])),
                    margin=c, n_samples=len(R))
    c, M, delta, pt = best
    raise CertificationError(
        f"pseudoconvexity search failed; best (M, delta) = ({M:g}, {delta:g})"
        f" with margin {c:.3g} at point {pt}")


def pseudo_energy_model(r, rho, tau, eta, k0, M, delta):
    """E_0: the energy form with G replaced by the model form G0."""
    lam = 0.5 - (1.0 - delta) * r * M
    G0 = -r * rho**2 - 2.0 * rho * tau - k0 * eta**2
    bg0 = -2.0 * (r * rho + tau)
    bgg0 = 2.0 * (r * rho**2 + 2.0 * tau * rho)
    return 0.25 * (M * bg0**2 - bgg0 - 4.0 * lam * G0)


# ---------------------------------------------------------------------------
# covariant multiplier identity on the (t, rt) reduction


def _metric_block(model, rt):
    """2x2 (t_*, rt) metric, inverse, and rt-derivative (closed forms)."""
    q, dq = _interp_q(model)
    wsh, dwsh = _interp_w(model)
    f = model.f(rt)
    fp = model.df(rt)
    wv, wp = wsh(rt), dwsh(rt)
    qv, qp = q(rt), dq(rt)
    g = np.array([[f, -wv], [-wv, -qv]])
    ginv = np.array([[qv, -wv], [-wv, -f]])
    dg = np.array([[fp, -wp], [-wp, -qp]])
    return g, ginv, dg


def _christoffel(model, rt):
    """Gamma^a_{bc} of the 4-metric restricted to the (t_*, rt) block."""
    g, ginv, dg = _metric_block(model, rt)
    Gam = np.zeros((2, 2, 2))
    # only the rt-derivative (index 1) of the metric is nonzero
    for a in range(2):
        for b in range(2):
            for c in range(2):
                s = 0.0
                for d in range(2):
                    term = 0.0
                    if b == 1:
                        term += dg[d, c]
                    if c == 1:
                        term += dg[d, b]
                    if d == 1:
                        term -= dg[b, c]
                    s += ginv[a, d] * term
                Gam[a, b, c] = 0.5 * s
    return Gam


def _box_radial(model, rt_grid, F, Drt):
    """Box_g F for a radial (stationary) function sampled on the grid."""
    f = model.f(rt_grid)
    inner = rt_grid**2 * (-f) * (Drt @ F)
    return (Drt @ inner) / rt_grid**2


def verify_multiplier_identity(model, geom, u, sigma=0.0, lam=None, n=801,
                               pad=0.05):
    """Max-norm residual of the divergence identity for the multiplier J.

    For v = e^{-i sigma t} u(rt) with u smooth and supported away from the
    chart edges, checks  Re(Box_g v (S vbar + w vbar)) = div_g J +
    Pi(dv, dvbar) + (1/2)(Box_g w)|v|^2  with S = grad_g r, w = lam +
    (1/2) Box_g r, on a uniform grid with 4th-order finite differences.
    Metric data and the collar function r are closed-form.
    """
    from .spectra import fd4_matrix
    nf, _ = _collar_data(model, geom)
    if lam is None:
        lam = lambda r: 0.5 - 0.25 * np.asarray(r, dtype=float)
    rt_lo, rt_hi = geom.rt_lo, geom.rt_hi
    span = rt_hi - rt_lo
    a_g, b_g = rt_lo + pad * span, rt_hi - pad * span
    rt = np.linspace(a_g, b_g, n)
    hstep = rt[1] - rt[0]
    Drt = fd4_matrix(n, hstep)

    q, dq = _interp_q(model)
    wsh, dwsh = _interp_w(model)
    f = model.f(rt)
    qv = q(rt)
    wv = wsh(rt)

    uu = np.asarray(u(rt), dtype=complex)
    up = Drt @ uu

    # Box_g v (mode form)
    box_u = (-sigma**2 * qv * uu + 1j * sigma * wv * up
             + (Drt @ (rt**2 * (1j * sigma * wv * uu - f * up))) / rt**2)

    # collar function r and its closed derivatives
    rr = nf.r_of_rt(rt)
    sgn = nf.sigma
    rp = sgn * nf.scale * qv                       # dr/drt
    # Box_g r in closed form: -(1/rt^2) d/drt (rt^2 f r')
    box_r = -sgn * nf.scale * (2.0 * (1.0 - wv**2) / rt
                               - 2.0 * wv * dwsh(rt))
    wmult = lam(rr) + 0.5 * box_r
    box_wmult = _box_radial(model, rt, wmult, Drt)

    # pointwise tensors
    sig_u2 = np.abs(uu) ** 2
    z = uu * np.conj(up)
    imz = np.imag(z)
    Gdv = qv * sigma**2 * sig_u2 - 2.0 * sigma * wv * imz - f * np.abs(up) ** 2

    lhs = np.zeros(n)
    div_term = np.zeros((n,))
    pi_term = np.zeros(n)
    Jrt = np.zeros(n)
    lam_v = lam(rr)
    dwm = Drt @ wmult

    for j in range(n):
        g, ginv, dg = _metric_block(model, rt[j])
        Gam = _christoffel(model, rt[j])
        # lowered v-gradient pairs: dv = (-i sigma u, u')
        dv = np.array([-1j * sigma * uu[j], up[j]])
        Q = np.real(np.outer(dv, np.conj(dv))) - 0.5 * Gdv[j] * g
        # S^a = g^{a rt} r'
        S = ginv[:, 1] * rp[j]
        # Hessian of r (lowered): r'' delta_{11} - Gamma^1_{ab} r'... the
        # second radial derivative of r is d(r')/drt
        rpp = sgn * nf.scale * dq(rt[j])
        Hess = np.zeros((2, 2))
        Hess[1, 1] = rpp
        Hess = Hess - rp[j] * Gam[1, :, :]
        Hess_up = ginv @ Hess @ ginv.T
        Pi = -Hess_up - lam_v[j] * ginv
        pi_term[j] = float(np.real(np.conj(dv) @ Pi @ dv))
        # J^a = Q^a_b S^b + (1/2) w d^a|v|^2 - (1/2) (d^a w)|v|^2
        Qmix = ginv @ Q
        du2 = 2.0 * np.real(z[j])              # d|u|^2/drt
        grad_u2 = ginv[:, 1] * du2
        grad_w = ginv[:, 1] * dwm[j]
        J = Qmix @ S + 0.5 * wmult[j] * grad_u2 - 0.5 * grad_w * sig_u2[j]
        Jrt[j] = np.real(J[1])
        Sv = S @ dv
        lhs[j] = np.real(box_u[j] * np.conj(Sv + wmult[j] * uu[j]))

    div_term = (Drt @ (rt**2 * Jrt)) / rt**2
    rhs = div_term + pi_term + 0.5 * box_wmult * sig_u2
    interior = slice(4, n - 4)
    return float(np.max(np.abs(lhs[interior] - rhs[interior])))


def modified_potential(model, geom, C, h, r_values, lam=None, n_local=401):
    """Potential V of the conjugated multiplier identity at Phi' = -C/h.

    V = (1/2)Box_g w + V0 w - (1/2)S(V1) - (1/2)V1 Box_g r + Phi' w^2 with
    V0 = r(Phi'' - Phi'^2) - Phi' Box_g r and V1 = V0 - 2 Phi' w, on the
    constant-slope collar region (Phi'' = 0).  Returns V at the requested
    collar radii.
    """
    from .spectra import fd4_matrix
    nf, _ = _collar_data(model, geom)
    if lam is None:
        lam = lambda r: 0.5 - 0.25 * np.asarray(r, dtype=float)
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    rt_pts = nf.rt_of_r(r_values)
    # local grid around the evaluation points for radial FD derivatives
    rt_min = float(np.min(rt_pts))
    rt_max = float(np.max(rt_pts))
    lo, hi = geom.rt_lo, geom.rt_hi
    margin = 0.1 * (hi - lo)
    a_g = max(lo, min(rt_min, rt_max) - margin)
    b_g = min(hi, max(rt_min, rt_max) + margin)
    if b_g - a_g < 1e-3 * (hi - lo):
        a_g, b_g = lo, lo + 0.2 * (hi - lo)
    rt = np.linspace(a_g, b_g, n_local)
    Drt = fd4_matrix(n_local, rt[1] - rt[0])

    q, _ = _interp_q(model)
    wsh, dwsh = _interp_w(model)
    wv = wsh(rt)
    qv = q(rt)
    sgn = nf.scale * nf.sigma
    rr = nf.r_of_rt(rt)
    rp = nf.sigma * nf.scale * qv
    box_r = -nf.sigma * nf.scale * (2.0 * (1.0 - wv**2) / rt
                                    - 2.0 * wv * dwsh(rt))
    Phi_p = -C / h
    V0 = rr * (0.0 - Phi_p**2) - Phi_p * box_r
    wm = lam(rr) + 0.5 * box_r
    V1 = V0 - 2.0 * Phi_p * wm
    SV1 = (-model.f(rt)) * rp * (Drt @ V1)
    box_wm = _box_radial(model, rt, wm, Drt)
    V = (0.5 * box_wm + V0 * wm - 0.5 * SV1 - 0.5 * V1 * box_r
         + Phi_p * wm**2)
    return np.interp(rt_pts, rt, V) if np.all(np.diff(rt) > 0) else V
