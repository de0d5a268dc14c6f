"""Fuzzy logic structure used to approximate the model mismatch.

Each rule ``j`` multiplies one membership value per input; the normalised
products form the basis ``phi``. Rules 1 and ``l`` use a sigmoid membership
``1/(1+exp(slope*(x-c)))``, the inner rules a Gaussian ``exp(-(x-c)^2/psi^2)``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError, DegenerateBasis

_ANGLE_CENTRES = (
    (-0.3, -0.25, -0.2, -0.15, -0.1, -0.05, 0.0, -0.01, 0.05),
    (-0.2, -0.15, -0.1, -0.05, -0.03, -0.01, 0.0, -0.01, 0.05),
    (-0.15, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3),
)
_RATE_CENTRES = (-1.0, -0.7, -0.4, -0.1, 0.0, 0.1, 0.4, 0.7, 1.0)
DEFAULT_CENTRES = _ANGLE_CENTRES + (_RATE_CENTRES,) * 3


def _default_centres():
    return np.array(DEFAULT_CENTRES)


@dataclass
class FLSConfig:
    """Rule centres are stored as an (inputs, rules) array."""
    centres: np.ndarray = field(default_factory=_default_centres)
    psi: float = math.sqrt(2.0)
    slope: float = 5.0

    def __post_init__(self):
        self.centres = np.asarray(self.centres, dtype=float)
        if self.centres.ndim != 2:
            raise ConfigError("centres must be a 2-D (inputs x rules) array")
        if self.rule_count < 2:
            raise ConfigError("need at least two rules")
        if not np.all(np.isfinite(self.centres)):
            raise ConfigError("rule centres must be finite")
        if not self.psi > 0:
            raise ConfigError("psi must be positive")

    @property
    def input_dim(self):
        return self.centres.shape[0]

    @property
    def rule_count(self):
        return self.centres.shape[1]


def membership(config, x):
    """Membership grades, shape ``x.shape[:-1] + (inputs, rules)``."""
    x = np.asarray(x, dtype=float)[..., :, None]
    c = config.centres
    mu = np.exp(-((x - c) ** 2) / config.psi ** 2)
    # both edge rules share one sigmoid orientation
    z = np.clip(config.slope * (x - c[:, [0, -1]]), -700, 700)
    mu[..., [0, -1]] = 1.0 / (1.0 + np.exp(z))
    return mu


def basis(config, x):
    """Normalised fuzzy basis vector(s) ``phi(x)``; ``x`` is ``(..., inputs)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != config.input_dim:
        raise ConfigError(f"expected {config.input_dim} inputs, got {x.shape[-1]}")
    firing = membership(config, x).prod(axis=-2)
    denom = firing.sum(axis=-1, keepdims=True)
    if np.any(~np.isfinite(denom)) or np.any(denom < 1e-300):
        raise DegenerateBasis("rule firing strengths underflow; input far outside the rule centres")
    return firing / denom


@dataclass
class FLSWeights:
    """Weight matrix (rules x joints) and additive error estimate (joints)."""
    vartheta_hat: np.ndarray
    eps_hat: np.ndarray
    vartheta_min: float = -50.0
    vartheta_max: float = 50.0

    @classmethod
    def zeros(cls, rules=9, joints=3, bound=50.0):
        return cls(np.zeros((rules, joints)), np.zeros(joints), -bound, bound)


def approximate(weights, config, x):
    """Mismatch estimate ``vartheta_hat^T phi(x) + eps_hat``."""
    phi = basis(config, x)
    return phi @ weights.vartheta_hat + weights.eps_hat


def saturate(raw, vartheta_min=-50.0, vartheta_max=50.0):
    if np.any(np.asarray(vartheta_min) > np.asarray(vartheta_max)):
        raise ConfigError("saturation bounds are not ordered")
    return np.clip(raw, vartheta_min, vartheta_max)


def saturation_inequality(true, raw, gamma_diag, vartheta_min=-50.0, vartheta_max=50.0):
    """Left side of ``(v - sat(r))^T Gamma^-1 (r - sat(r))``; nonpositive for in-bound ``v``."""
    sat = saturate(raw, vartheta_min, vartheta_max)
    return np.sum((true - sat) * (raw - sat) / gamma_diag, axis=-1)


def fit_weights(config, states, targets, ridge=0.0):
    """Batch least-squares weights for ``targets ~ phi(states) @ W``.

    Returns ``(W, residual)`` where ``residual = targets - phi @ W``.
    """
    phi = basis(config, states)
    if ridge > 0:
        lhs = phi.T @ phi + ridge * np.eye(phi.shape[1])
        w = np.linalg.solve(lhs, phi.T @ targets)
    else:
        w, *_ = np.linalg.lstsq(phi, targets, rcond=None)
    return w, targets - phi @ w
