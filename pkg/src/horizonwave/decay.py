"""Time-domain evolution and energy decay diagnostics.

The pencil P(omega) = P0 + omega P1 + omega^2 P2 corresponds, through
omega <-> i d/dt, to the second-order evolution

    v_tt + L1 v_t + L2 v = 0,   L2 = -P2^{-1} P0,  L1 = -P2^{-1} (i P1),

whose first-order generator on states (v, v_t) has eigenvalues -i omega at
the pencil resonances.  Evolution is by classical RK4 with a step chosen
from the spectral radius of the generator; trajectories are sampled on a
logarithmic time grid so decay over t in [0, 1e3] is resolved uniformly
in log t.
"""

from dataclasses import dataclass

import numpy as np


class InstabilityError(RuntimeError):
    """The discrete evolution left the stability envelope."""


@dataclass(frozen=True)
class GeneratorMatrix:
    """First-order generator A = [[0, I], [-L2, -L1]] with energy Gram."""

    A: np.ndarray
    gram_energy: np.ndarray     # blockdiag(H1 Gram, L2 Gram)
    L1: np.ndarray
    L2: np.ndarray
    pencil: object

    @property
    def n(self):
        return self.L1.shape[0]

    def eigen_frequencies(self):
        """Pencil resonances recovered as i * eigenvalues of A."""
        lam = np.linalg.eigvals(self.A)
        return 1j * lam

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def energy(self, v, vt):
        X = np.concatenate([v, vt])
        return float(np.real(np.vdot(X, self.gram_energy @ X)))

    def data_norm(self, v, vt):
        """Discrete X-norm ||v||_H1 + ||L2 v + L1 vt||_L2 of initial data."""
        p = self.pencil
        h1 = np.real(np.vdot(v, p.gram_h1() @ v))
        w = self.L2 @ v + self.L1 @ vt
        l2 = np.real(np.vdot(w, p.gram_l2 @ w))
        return float(np.sqrt(h1) + np.sqrt(l2))


def assemble_generator(pencil):
    """Build the real first-order generator from a discretized pencil."""
    n = pencil.n
    c = np.real(np.diag(pencil.P2))
    inv = 1.0 / c
    L2 = -(inv[:, None] * np.real(pencil.P0))
    L1 = -(inv[:, None] * np.real(1j * pencil.P1))
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -L2
    A[n:, n:] = -L1
    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = pencil.gram_h1()
    G[n:, n:] = pencil.gram_l2
    return GeneratorMatrix(A=A, gram_energy=G, L1=L1, L2=L2, pencil=pencil)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    energies: np.ndarray        # energy norm (square root of the quadratic form)
    data_norm: float
    dt: float
    n_steps: int

    def sample_norms(self):
        return self.energies


def evolve(gen, v0, v1, t_final, dt=None, n_samples=160, safety=0.5,
           blowup_factor=50.0):
    """Integrate the wave system by RK4 and record the energy history.

    ``v0``/``v1`` are initial value and velocity at the nodes.  The step
    defaults to safety * 2.8 / rho(A) (the RK4 imaginary-axis stability
    limit).  Sample times are logarithmic in 1 + t.  Raises
    InstabilityError when the energy exceeds ``blowup_factor`` times its
    running admissible envelope.
    """
    if t_final <= 0.0:
        raise ValueError("t_final must be positive")
    rho = gen.spectral_radius()
    if dt is None:
        dt = safety * 2.8 / rho
    n_steps = int(np.ceil(t_final / dt))
    dt = t_final / n_steps

    X = np.concatenate([np.asarray(v0, dtype=float),
                        np.asarray(v1, dtype=float)])
    A = gen.A
    G = gen.gram_energy

    def en(Xv):
        return float(np.sqrt(max(np.real(np.vdot(Xv, G @ Xv)), 0.0)))

    t_samp = np.unique(np.concatenate(
        [[0.0], np.expm1(np.linspace(0.0, np.log1p(t_final), n_samples)),
         [t_final]]))
    times, energies = [], []
    e0 = en(X)
    nxt = 0
    t = 0.0
    for step in range(n_steps + 1):
        while nxt < len(t_samp) and t >= t_samp[nxt] - 0.5 * dt:
            times.append(t)
            energies.append(en(X))
            nxt += 1
        if step == n_steps:
            break
        k1 = A @ X
        k2 = A @ (X + 0.5 * dt * k1)
        k3 = A @ (X + 0.5 * dt * k2)
        k4 = A @ (X + dt * k3)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (step + 1) * dt
        if not np.all(np.isfinite(X)):
            raise InstabilityError(f"non-finite state at t = {t:.3g}")
        if step % 64 == 0 and en(X) > blowup_factor * max(e0, 1e-300):
            raise InstabilityError(
                f"energy grew by more than {blowup_factor:g}x at t = {t:.3g}")
    if not times or times[-1] < t_final - 0.5 * dt:
        times.append(t_final)
        energies.append(en(X))
    v_data = np.asarray(v0, dtype=float)
    return Trajectory(times=np.array(times), energies=np.array(energies),
                      data_norm=gen.data_norm(v_data, np.asarray(v1, dtype=float)),
                      dt=dt, n_steps=n_steps)


@dataclass(frozen=True)
class DecayReport:
    log_constant: float         # sup_t  E(t) * log(2 + t)^k / ||data||_X
    log_exponent: float
    bounded: bool               # envelope stays below its early-time maximum
    exp_rate: float             # fitted exponential rate of the tail
    tail_window: tuple


def fit_log_decay(traj, k=2.0, tail_fraction=0.25):
    """Check a logarithmic decay envelope and fit the tail rate.

    Forms the weighted history E(t) * log(2 + t)^k / ||data||_X and reports
    its supremum; ``bounded`` requires the supremum over the final quarter
    (in log time) not to exceed the global supremum attained earlier, i.e.
    the envelope is genuinely saturated at early times, not growing.  The
    exponential rate is a least-squares slope of log E over the tail
    (meaningful for single-mode data; the report is still valid otherwise).
    """
    t = traj.times
    e = traj.energies
    scale = max(traj.data_norm, 1e-300)
    weighted = e * np.log(2.0 + t) ** k / scale
    c_sup = float(np.max(weighted))
    i_tail = int(len(t) * (1.0 - tail_fraction))
    tail_sup = float(np.max(weighted[i_tail:]))
    bounded = tail_sup <= c_sup * (1.0 + 1e-12) and np.argmax(weighted) < i_tail

    mask = (e > 1e-290 * scale) & (t > 0.0)
    tm, em = t[mask], e[mask]
    if len(tm) >= 4:
        j = int(len(tm) * (1.0 - tail_fraction))
        rate = float(np.polyfit(tm[j:], np.log(em[j:]), 1)[0]) \
            if len(tm) - j >= 3 else np.nan
        window = (float(tm[j]), float(tm[-1]))
    else:
        rate, window = np.nan, (np.nan, np.nan)
    return DecayReport(log_constant=c_sup, log_exponent=float(k),
                       bounded=bool(bounded), exp_rate=rate,
                       tail_window=window)


def project_single_mode(gen, which="slowest"):
    """Real initial data dominated by one decaying mode.

    Returns (v0, v1, omega) where omega is the selected resonance; the data
    are the real and imaginary-combined parts of its eigenvector, so the
    energy decays like exp(2 Im(omega) t).
    """
    lam, V = np.linalg.eig(gen.A)
    om = 1j * lam
    good = om.imag < -1e-10
    if not np.any(good):
        raise ValueError("no decaying mode found")
    idx = np.nonzero(good)[0]
    if which == "slowest":
        pick = idx[np.argmax(om.imag[idx])]
    else:
        pick = idx[np.argmin(om.imag[idx])]
    n = gen.n
    vec = V[:, pick]
    vec = vec / np.linalg.norm(vec)
    # real part of a complex-mode trajectory solves the real system
    v0 = np.real(vec[:n])
    v1 = np.real(vec[n:])
    if np.linalg.norm(v0) < 1e-8:
        v0, v1 = np.imag(vec[:n]), np.imag(vec[n:])
    return v0, v1, om[pick]
