"""AMCILC control law and update laws, plus the PID, PIDILC and AFC baselines.

All controllers act on motor-side torque. Controllers that keep per-sample
memory across iterations expose ``start(memory, adapt)`` / ``step(...)`` /
``finish()`` so the simulator can drive them sample by sample.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _core
from .errors import BarrierViolation, ConfigError, GridMismatch, SingularConfiguration
from .fls import FLSConfig, basis, saturate

BARRIER_MARGIN = 1e-6


@dataclass
class AMCILCGains:
    sigma: float = 1.0
    k_gain: tuple = (15.0, 15.0, 15.0)
    v_c: float = 0.1
    gamma: float = 1.0            # Gamma_i = gamma * I_l
    nu: float = 0.01
    vartheta_min: float = -50.0
    vartheta_max: float = 50.0

    def __post_init__(self):
        self.k_gain = tuple(float(k) for k in np.broadcast_to(self.k_gain, (3,)))
        for name in ("sigma", "v_c", "gamma", "nu"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if min(self.k_gain) <= 0:
            raise ConfigError("feedback gains must be positive")
        if self.vartheta_min > self.vartheta_max:
            raise ConfigError("weight bounds are not ordered")

    def check_feasible(self, theta_dot_max, theta_dot_r_max):
        """Barrier bound must leave room between reference and velocity limit."""
        if not self.v_c < theta_dot_max - theta_dot_r_max:
            raise ConfigError(
                f"v_c={self.v_c} must be below theta_dot_max - theta_dot_r_max = "
                f"{theta_dot_max - theta_dot_r_max:.4g}")


# theoretical-model and Simscape-model gain sets
CASE1_GAINS = dict(sigma=1.0, k_gain=(1.0, 1.0, 1.0), v_c=0.1, gamma=1.0, nu=0.01)
CASE2_GAINS = dict(sigma=1.0, k_gain=(15.0, 15.0, 15.0), v_c=0.1, gamma=1.0, nu=0.01)
AFC_GAINS = dict(sigma=1.0, k_gain=(10.0, 10.0, 10.0), v_c=0.1, gamma=20.0, nu=0.1)


@dataclass
class PIDGains:
    kp: float
    ki: float
    kd: float


PID_BOOTSTRAP_GAINS = PIDGains(kp=20.0, ki=20.0, kd=10.0)
PIDILC_GAINS = PIDGains(kp=1.0, ki=1.0, kd=1.0)


def auxiliary_error(e, e_dot, sigma):
    return np.asarray(e_dot) + sigma * np.asarray(e)


def barrier_terms(eta, v_c):
    """Tangent barrier value per joint and the gradient-like vector ``Psi``."""
    eta = np.asarray(eta, dtype=float)
    if np.any(np.abs(eta) >= v_c * (1 - BARRIER_MARGIN)):
        raise BarrierViolation(f"|eta|={np.max(np.abs(eta)):.4g} reached the bound {v_c}",
                               eta=eta.copy(), v_c=v_c)
    arg = np.pi * eta ** 2 / (2 * v_c ** 2)
    return v_c ** 2 / np.pi * np.tan(arg), eta / np.cos(arg) ** 2


def learning_signal(psi, m_inv):
    """``Lambda_i = Psi^T m_{:,i}`` with ``m = Mbar^-1``."""
    return np.asarray(m_inv).T @ np.asarray(psi)


def amcilc_control(theta, theta_dot, ref, estimate, gains, nominal_terms):
    """Model-based feedforward, auxiliary-error feedback and mismatch compensation.

    ``ref`` is ``(theta_r, theta_dot_r, theta_ddot_r)``; ``estimate`` the
    current value of ``vartheta_hat^T phi + eps_hat``; ``nominal_terms`` the
    nominal ``(M, C, G)`` at the measured state.
    """
    theta_r, theta_dot_r, theta_ddot_r = ref
    M, C, G = nominal_terms
    e = np.asarray(theta) - theta_r
    e_dot = np.asarray(theta_dot) - theta_dot_r
    eta = auxiliary_error(e, e_dot, gains.sigma)
    k = np.asarray(gains.k_gain)
    return C @ theta_dot + G - estimate + M @ (theta_ddot_r - gains.sigma * e_dot - k * eta)


def update_laws(prev_vartheta, prev_eps, phi, lam, gains):
    """Iteration-axis update at every sample of the grid.

    ``prev_vartheta`` is ``(N, l, 3)``, ``prev_eps`` ``(N, 3)``, ``phi``
    ``(N, l)``, ``lam`` ``(N, 3)``. Works equally on single samples.
    """
    prev_vartheta = np.asarray(prev_vartheta)
    phi = np.asarray(phi)
    lam = np.asarray(lam)
    if prev_vartheta.shape[:-2] != phi.shape[:-1] or phi.shape[:-1] != lam.shape[:-1]:
        raise GridMismatch("memory, basis and learning signal are on different grids")
    raw = prev_vartheta + gains.gamma * phi[..., :, None] * lam[..., None, :]
    vartheta = saturate(raw, gains.vartheta_min, gains.vartheta_max)
    eps = np.asarray(prev_eps) + gains.nu * lam
    return vartheta, eps


def pid_bootstrap(e, e_dot, e_int, gains=PID_BOOTSTRAP_GAINS):
    return -gains.kp * np.asarray(e) - gains.kd * np.asarray(e_dot) - gains.ki * np.asarray(e_int)


def pidilc_control(u_prev, e, e_dot, e_int, gains=PIDILC_GAINS):
    return np.asarray(u_prev) + pid_bootstrap(e, e_dot, e_int, gains)


@dataclass
class IterationMemory:
    """Per-sample learning state on the shared time grid."""
    vartheta_hat: np.ndarray    # (N, l, 3)
    eps_hat: np.ndarray         # (N, 3)
    u: np.ndarray               # (N, 3)

    @classmethod
    def zeros(cls, samples, rules=9):
        return cls(np.zeros((samples, rules, 3)), np.zeros((samples, 3)), np.zeros((samples, 3)))

    @property
    def samples(self):
        return self.u.shape[0]

    def save(self, path):
        np.savez(path, vartheta_hat=self.vartheta_hat, eps_hat=self.eps_hat, u=self.u)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            return cls(data["vartheta_hat"], data["eps_hat"], data["u"])


class _Recorder:
    def __init__(self, samples, rules):
        self.vartheta = np.zeros((samples, rules, 3))
        self.eps = np.zeros((samples, 3))
        self.u = np.zeros((samples, 3))


def _nominal_terms(pv, theta, theta_dot):
    M, C, G, _, ok = _core.terms(theta, theta_dot, pv)
    if not ok:
        raise SingularConfiguration(f"nominal model undefined at theta={theta.tolist()}")
    return M, C, G


class AMCILC:
    """Adaptive mismatch-compensated ILC, driven one sample at a time."""
    name = "amcilc"
    learns = True

    def __init__(self, nominal, gains=None, fls_config=None):
        self.nominal = nominal
        self.gains = gains or AMCILCGains(**CASE2_GAINS)
        self.fls = fls_config or FLSConfig()
        self._pv = nominal.packed

    def start(self, memory, adapt=True):
        self.memory = memory
        self.adapt = adapt
        self.rec = _Recorder(memory.samples, self.fls.rule_count)

    def step(self, n, theta, theta_dot, ref, dt):
        g = self.gains
        x = np.concatenate([theta, theta_dot])
        phi = basis(self.fls, x)
        M, C, G = _nominal_terms(self._pv, theta, theta_dot)
        eta = auxiliary_error(theta - ref[0], theta_dot - ref[1], g.sigma)
        _, psi = barrier_terms(eta, g.v_c)
        vartheta = self.memory.vartheta_hat[n]
        eps = self.memory.eps_hat[n]
        if self.adapt:
            lam = learning_signal(psi, np.linalg.inv(M))
            vartheta, eps = update_laws(vartheta, eps, phi, lam, g)
        u = amcilc_control(theta, theta_dot, ref, phi @ vartheta + eps, g, (M, C, G))
        self.rec.vartheta[n] = vartheta
        self.rec.eps[n] = eps
        self.rec.u[n] = u
        return u, eta

    def finish(self):
        r = self.rec
        return IterationMemory(r.vartheta, r.eps, r.u)


class AFC(AMCILC):
    """Same law as AMCILC with weights integrated in time inside one run."""
    name = "afc"
    learns = False

    def __init__(self, nominal, gains=None, fls_config=None):
        super().__init__(nominal, gains or AMCILCGains(**AFC_GAINS), fls_config)

    def start(self, memory, adapt=True):
        super().start(memory, adapt)
        self._vartheta = np.zeros((self.fls.rule_count, 3))
        self._eps = np.zeros(3)

    def step(self, n, theta, theta_dot, ref, dt):
        g = self.gains
        x = np.concatenate([theta, theta_dot])
        phi = basis(self.fls, x)
        M, C, G = _nominal_terms(self._pv, theta, theta_dot)
        eta = auxiliary_error(theta - ref[0], theta_dot - ref[1], g.sigma)
        _, psi = barrier_terms(eta, g.v_c)
        u = amcilc_control(theta, theta_dot, ref, phi @ self._vartheta + self._eps, g, (M, C, G))
        self.rec.vartheta[n] = self._vartheta
        self.rec.eps[n] = self._eps
        self.rec.u[n] = u
        if self.adapt:
            lam = learning_signal(psi, np.linalg.inv(M))
            self._vartheta = saturate(self._vartheta + dt * g.gamma * np.outer(phi, lam),
                                      g.vartheta_min, g.vartheta_max)
            self._eps = self._eps + dt * g.nu * lam
        return u, eta


class PIDILC:
    """PID bootstrap at iteration 0, then stored input plus PID correction."""
    name = "pidilc"
    learns = True

    def __init__(self, bootstrap=PID_BOOTSTRAP_GAINS, gains=PIDILC_GAINS, sigma=1.0, rules=9):
        self.bootstrap = bootstrap
        self.gains = gains
        self.sigma = sigma
        self.rules = rules

    def start(self, memory, adapt=True):
        self.memory = memory
        self.first = not adapt
        self.rec = _Recorder(memory.samples, self.rules)
        self._int = np.zeros(3)
        self._last_e = None

    def step(self, n, theta, theta_dot, ref, dt):
        e = theta - ref[0]
        e_dot = theta_dot - ref[1]
        if self._last_e is not None:
            self._int = self._int + 0.5 * dt * (self._last_e + e)
        self._last_e = e
        if self.first:
            u = pid_bootstrap(e, e_dot, self._int, self.bootstrap)
        else:
            u = pidilc_control(self.memory.u[n], e, e_dot, self._int, self.gains)
        self.rec.u[n] = u
        return u, auxiliary_error(e, e_dot, self.sigma)

    def finish(self):
        r = self.rec
        return IterationMemory(r.vartheta, r.eps, r.u)
