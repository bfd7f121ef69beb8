"""Stationary symbol calculus on the collar normal form.

In the normalized collar coordinates (r, y^A) with unit lapse, the dual
metric function restricted to stationary covectors reads

    G(r, rho, tau, eta) = (tau - W(r) rho)^2 - rho^2 - kang(r) eta^2,

with W the radial shift (W = 1 at the designated horizon) and kang the
scalar angular coefficient.  By spherical symmetry the Poisson bracket of
two such functions reduces to the (r, rho) bracket with tau, eta as
parameters.  The model quadratic form is G0 = -r rho^2 - 2 rho tau -
kang(0) eta^2, and G - G0 is negligible of second kind.
"""

from dataclasses import dataclass

import numpy as np


class ChartDomainError(ValueError):
    """Symbol point outside the collar chart."""


class StepUnderflowError(RuntimeError):
    """Finite differencing could not reach the requested tolerance."""


class NegligibleVerificationError(RuntimeError):
    """No finite constant certifies the negligible-class bounds."""


@dataclass(frozen=True)
class SymbolPoint:
    """Point (r, rho, tau, eta) of the reduced stationary cotangent space."""

    r: float
    rho: float
    tau: float
    eta: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.r) < 0.0):
            raise ChartDomainError(f"collar distance must be >= 0, got {self.r}")
        if np.any(np.asarray(self.eta) < 0.0):
            raise ChartDomainError(f"angular magnitude must be >= 0, got {self.eta}")

    def scaled(self, lam):
        """Scale the fiber variables; G, G0, Y, Z are homogeneous degree 2."""
        return SymbolPoint(self.r, lam * self.rho, lam * self.tau, lam * self.eta)


def _normal(geom):
    nf = getattr(geom, "normal", None)
    if nf is None:
        raise ChartDomainError("slice has no normal form; call model.normalize first")
    return nf


def _check_r(nf, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < -1e-14) or np.any(r > nf.r_total * (1 + 1e-12)):
        raise ChartDomainError("collar distance outside the slice")
    return np.clip(r, 0.0, nf.r_total)


# ---------------------------------------------------------------------------
# closed-form symbols


def eval_G(model, geom, p):
    """Dual metric function at a symbol point (vectorized in arrays)."""
    nf = _normal(geom)
    r = _check_r(nf, p.r)
    u = p.tau - nf.shift(r) * p.rho
    return u * u - p.rho**2 - nf.kang(r) * p.eta**2


def eval_G0(p, k0_ang):
    """Model quadratic form -r rho^2 - 2 rho tau - k0_ang eta^2."""
    return -p.r * p.rho**2 - 2.0 * p.rho * p.tau - k0_ang * p.eta**2


def eval_YZ(p, k_ang):
    """Auxiliary quantities Y = (r rho)^2 + tau^2, Z = r rho^2 + k eta^2."""
    Y = (p.r * p.rho) ** 2 + p.tau**2
    Z = p.r * p.rho**2 + k_ang * p.eta**2
    return Y, Z


def dG_drho(model, geom, p):
    """Hand-coded rho-derivative of G; equals the bracket {G, r}."""
    nf = _normal(geom)
    r = _check_r(nf, p.r)
    W = nf.shift(r)
    return -2.0 * W * (p.tau - W * p.rho) - 2.0 * p.rho


def dG_dr(model, geom, p):
    """Hand-coded base derivative of G along the collar coordinate."""
    nf = _normal(geom)
    r = _check_r(nf, p.r)
    W = nf.shift(r)
    return (-2.0 * nf.dshift(r) * p.rho * (p.tau - W * p.rho)
            - nf.dkang(r) * p.eta**2)


def bracket_G_r(model, geom, p):
    """{G, r} = -2(r rho + tau) up to a first-kind negligible remainder."""
    return dG_drho(model, geom, p)


def bracket_G_G_r(model, geom, p):
    """{G, {G, r}} in closed form (= 2(r rho^2 + 2 tau rho) + negligible)."""
    nf = _normal(geom)
    r = _check_r(nf, p.r)
    W = nf.shift(r)
    dW = nf.dshift(r)
    dB_dr = -2.0 * dW * p.tau + 4.0 * W * dW * p.rho
    dB_drho = 2.0 * (W * W - 1.0)
    return dG_drho(model, geom, p) * dB_dr - dG_dr(model, geom, p) * dB_drho


def remainder_N1(model, geom, p):
    """F = {G, r} + 2(r rho + tau); first-kind negligible."""
    return bracket_G_r(model, geom, p) + 2.0 * (p.r * p.rho + p.tau)


def remainder_N2(model, geom, p):
    """H = {G, {G, r}} - 2(r rho^2 + 2 tau rho); second-kind negligible."""
    return bracket_G_G_r(model, geom, p) - 2.0 * (p.r * p.rho**2 + 2.0 * p.tau * p.rho)


# ---------------------------------------------------------------------------
# finite-difference Poisson bracket


def poisson_bracket(F1, F2, p, rel_step=1e-4, tol=1e-9):
    """{F1, F2} at p by Richardson-extrapolated central differences.

    F1, F2 take a SymbolPoint and return a real value (arrays allowed if
    the point carries arrays).  The bracket is over the (r, rho) pair; tau
    and eta are parameters of the stationary reduction.
    """

    def partials(F, h_r, h_rho):
        rp = np.maximum(p.r + h_r, 0.0)
        rm = np.maximum(p.r - h_r, 0.0)
        dr = (F(SymbolPoint(rp, p.rho, p.tau, p.eta))
              - F(SymbolPoint(rm, p.rho, p.tau, p.eta))) / (rp - rm)
        drho = (F(SymbolPoint(p.r, p.rho + h_rho, p.tau, p.eta))
                - F(SymbolPoint(p.r, p.rho - h_rho, p.tau, p.eta))) / (2.0 * h_rho)
        return dr, drho

    scale_r = max(abs(float(np.max(np.atleast_1d(p.r)))), 1.0)
    scale_f = max(abs(float(np.max(np.abs(np.atleast_1d(p.rho))))),
                  abs(float(np.max(np.abs(np.atleast_1d(p.tau))))), 1.0)

    def bracket_at(h):
        d1r, d1rho = partials(F1, h * scale_r, h * scale_f)
        d2r, d2rho = partials(F2, h * scale_r, h * scale_f)
        return d1rho * d2r - d1r * d2rho

    h = rel_step
    prev = bracket_at(h)
    for _ in range(12):
        h /= 2.0
        if h * scale_f < 1e-13:
            raise StepUnderflowError("bracket differencing step underflow")
        curr = bracket_at(h)
        rich = (4.0 * curr - prev) / 3.0
        err = np.max(np.abs(rich - curr))
        denom = max(float(np.max(np.abs(rich))), 1.0)
        if err <= tol * denom:
            return rich
        prev = curr
    return rich


# ---------------------------------------------------------------------------
# negligible-class verification


def bracket_table(model, geom, p):
    """Closed-form values of all collar symbols at one point (dict)."""
    nf = _normal(geom)
    k0 = float(nf.kang(0.0))
    kr = nf.kang(p.r)
    Y, Z = eval_YZ(p, kr)
    return {
        "r": p.r, "rho": p.rho, "tau": p.tau, "eta": p.eta,
        "G": eval_G(model, geom, p),
        "G0": eval_G0(p, k0),
        "Y": Y, "Z": Z,
        "bG_r": bracket_G_r(model, geom, p),
        "bG_bG_r": bracket_G_G_r(model, geom, p),
        "F": remainder_N1(model, geom, p),
        "H": remainder_N2(model, geom, p),
    }


def verify_negligible(model, geom, samples, gamma, c_cap=1e6, n_grid=121):
    """Empirically certify the negligible-class bounds on a sample set.

    For the given gamma > 0 this finds the smallest log-grid constant
    C_gamma and the largest collar radius r_gamma <= max sample radius such
    that, on every sample with r <= r_gamma,

        r^{-1} |tau| |F| <= C_gamma tau^2 + gamma Z,
        |H| <= C_gamma Y + gamma kang eta^2,
        |H| <= C_gamma tau^2 + gamma Z,
        Z <= C (|G| + tau^2 / r),

    and returns (C_gamma, r_gamma, margin) with margin the worst slack of
    the first three bounds at the certified constant (>= 0 on success).
    Raises NegligibleVerificationError when no capped constant certifies
    any initial collar segment, reporting a violating point.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    pts = list(samples)
    if not pts:
        raise ValueError("empty sample set")
    nf = _normal(geom)
    r = np.array([p.r for p in pts])
    rho = np.array([p.rho for p in pts])
    tau = np.array([p.tau for p in pts])
    eta = np.array([p.eta for p in pts])
    arr = SymbolPoint(r, rho, tau, eta)  # array-carrying point

    kr = nf.kang(np.maximum(r, 1e-300))
    G = eval_G(model, geom, arr)
    F = remainder_N1(model, geom, arr)
    H = remainder_N2(model, geom, arr)
    Y = (r * rho) ** 2 + tau**2
    Z = r * rho**2 + kr * eta**2
    keta2 = kr * eta**2

    with np.errstate(divide="ignore", invalid="ignore"):
        lhs1 = np.where(r > 0, np.abs(tau) * np.abs(F) / np.where(r > 0, r, 1.0), 0.0)
        # required constants per sample for each inequality
        c1 = np.where(tau != 0.0, (lhs1 - gamma * Z) / tau**2, np.where(lhs1 <= gamma * Z, 0.0, np.inf))
        c2 = np.where(Y > 0, (np.abs(H) - gamma * keta2) / Y,
                      np.where(np.abs(H) <= gamma * keta2, 0.0, np.inf))
        c3 = np.where(tau != 0.0, (np.abs(H) - gamma * Z) / tau**2,
                      np.where(np.abs(H) <= gamma * Z, 0.0, np.inf))
        tau2_over_r = np.where(r > 0, tau**2 / np.where(r > 0, r, 1.0),
                               np.where(tau == 0.0, 0.0, np.inf))
        c4_den = np.abs(G) + tau2_over_r
        c4 = np.where(c4_den > 0, Z / c4_den, 0.0)

    need = np.maximum.reduce([c1, c2, c3])
    order = np.argsort(r, kind="stable")
    # largest initial collar segment certified below the cap
    sorted_need = need[order]
    ok = np.maximum.accumulate(sorted_need) <= c_cap
    if not ok[0]:
        bad = pts[int(order[0])]
        raise NegligibleVerificationError(f"no finite constant certifies sample {bad}")
    last = int(np.max(np.nonzero(ok)[0]))
    r_gamma = float(r[order[last]])
    mask = r <= r_gamma
    c_needed = float(np.max(need[mask]))
    grid = np.logspace(0.0, np.log10(c_cap), n_grid)
    candidates = grid[grid >= max(c_needed, 1.0)]
    c_gamma = float(candidates[0]) if candidates.size else float(max(c_needed, 1.0))

    m1 = c_gamma * tau[mask] ** 2 + gamma * Z[mask] - lhs1[mask]
    m2 = c_gamma * Y[mask] + gamma * keta2[mask] - np.abs(H[mask])
    m3 = c_gamma * tau[mask] ** 2 + gamma * Z[mask] - np.abs(H[mask])
    margin = float(min(m1.min(), m2.min(), m3.min()))
    c_zg = float(np.max(c4[mask]))
    return {"C_gamma": c_gamma, "r_gamma": r_gamma, "margin": margin,
            "C_ZG": c_zg, "n_certified": int(np.sum(mask))}
