"""Lumped rigid-body model of the Delta robot driven through geared motors.

Each chain's lower-arm pair is split half to the elbow and half to the moving
platform, which gives the classic closed form

    M_rr = diag(I_arm) + m_eff J^T J,   C_rr = m_eff J^T J_dot,
    G_rr = -m_arm g l1 cos(theta) + m_eff g J^T e_z.

The Coriolis factorisation ``m_eff J^T J_dot`` makes ``M_dot - 2C`` skew
symmetric, so the passive system conserves energy exactly. Everything is then
reflected to the motor side: ``M = M_rr/n + I_M n``, ``C = C_rr/n``,
``G = G_rr/n``, ``B = B_damp n``.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from . import _core
from .errors import ConfigError, SingularConfiguration, SingularMass
from .kinematics import forward_kinematics
from .params import GRAVITY, RobotParams

log = logging.getLogger(__name__)

PERTURBABLE = ("m_p", "rho_r", "m_lump", "I_M", "I_px", "I_py", "I_pz")
MASS_COND_MAX = 1e10


@dataclass(frozen=True)
class RigidModel:
    params: RobotParams = field(default_factory=RobotParams)
    perturbation: tuple = ()           # ((name, relative deviation), ...)
    include_motor_damping: bool = False
    torque_warn: float = float("inf")

    def __post_init__(self):
        pert = dict(self.perturbation)
        for name, value in pert.items():
            if name not in PERTURBABLE:
                raise ConfigError(f"cannot perturb {name!r}; choose from {PERTURBABLE}")
            if abs(value) >= 0.5:
                raise ConfigError(f"perturbation of {name} must be below 50%")
        object.__setattr__(self, "perturbation", tuple(sorted(pert.items())))
        object.__setattr__(self, "_effective", self.params.scaled(**pert))

    @property
    def effective(self):
        """Parameters after applying the relative deviations."""
        return self._effective

    @property
    def packed(self):
        """Flat parameter vector consumed by the numba kernels."""
        return _core.pack(self._effective, self.include_motor_damping)

    @property
    def is_nominal(self):
        return not self.perturbation and not self.include_motor_damping

    def nominal(self):
        return RigidModel(self.params, torque_warn=self.torque_warn)


def true_plant(params, perturbation=None, damping=True):
    """Plant with the default mismatch: +5% MP mass and arm density, motor damping."""
    if perturbation is None:
        perturbation = {"m_p": 0.05, "rho_r": 0.05}
    return RigidModel(params, tuple(perturbation.items()), include_motor_damping=damping)


@dataclass
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    G: np.ndarray
    B: np.ndarray


def compute_terms(model, theta, theta_dot):
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    M, C, G, b, ok = _core.terms(theta, theta_dot, model.packed)
    if not ok:
        raise SingularConfiguration(f"no valid assembly at theta={theta.tolist()}")
    return DynamicsTerms(M, C, G, b * np.eye(3))


def forward_dynamics(model, theta, theta_dot, u, terms=None):
    """Angular acceleration ``M^-1 (u - C qd - B qd - G)``."""
    t = compute_terms(model, theta, theta_dot) if terms is None else terms
    theta_dot = np.asarray(theta_dot, dtype=float)
    rhs = np.asarray(u, dtype=float) - (t.C + t.B) @ theta_dot - t.G
    if np.linalg.cond(t.M) > MASS_COND_MAX:
        raise SingularMass("inertia matrix is ill conditioned")
    return np.linalg.solve(t.M, rhs)


def inverse_dynamics(model, theta, theta_dot, theta_ddot, terms=None):
    t = compute_terms(model, theta, theta_dot) if terms is None else terms
    theta_dot = np.asarray(theta_dot, dtype=float)
    u = t.M @ np.asarray(theta_ddot, dtype=float) + (t.C + t.B) @ theta_dot + t.G
    if np.any(np.abs(u) > model.torque_warn):
        log.warning("torque %s exceeds warning threshold %g", u, model.torque_warn)
    return u


def mismatch_torque(true_model, nominal_model, theta, theta_dot, theta_ddot):
    """The torque the nominal model is missing, ``-(dM qdd + dC qd + dG + B qd)``."""
    return (inverse_dynamics(nominal_model, theta, theta_dot, theta_ddot)
            - inverse_dynamics(true_model, theta, theta_dot, theta_ddot))


def potential_energy(model, theta):
    """Gravitational energy reflected to the motor side."""
    pv = model.packed
    theta = np.asarray(theta, dtype=float)
    pose = forward_kinematics(theta, model.effective)
    v = (-pv[_core.ARM_MOMENT] * GRAVITY * np.sin(theta).sum()
         + pv[_core.MEFF] * GRAVITY * pose[2])
    return v / pv[_core.NGEAR]


def total_energy(model, theta, theta_dot):
    theta_dot = np.asarray(theta_dot, dtype=float)
    M = compute_terms(model, theta, theta_dot).M
    return 0.5 * theta_dot @ M @ theta_dot + potential_energy(model, theta)
