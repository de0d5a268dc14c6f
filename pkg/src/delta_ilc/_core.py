"""Numba kernels for the per-step kinematics and dynamics.

The public functions in ``kinematics`` and ``dynamics`` wrap these, and the
simulator calls them directly inside its time loop. Parameters travel as a
flat float vector built by ``pack``.
"""
from functools import lru_cache
import math

import numpy as np
from numba import njit

GRAVITY = 9.81

# pack() layout
L1, L2, EA, EB, MEFF, IARM, ARM_MOMENT, NGEAR, IM, BDAMP = range(10)

_AZ = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
RADIAL = np.stack([np.cos(_AZ), np.sin(_AZ), np.zeros(3)], axis=1)


@lru_cache(maxsize=128)
def pack(p, damping):
    m_la = p.mass_lower_arm
    m_ua = p.mass_upper_arm
    out = np.array([
        p.l1, p.l2, p.e_a, p.e_b,
        p.m_p + 3 * m_la,
        m_ua * p.l1 ** 2 / 3 + (p.m_lump + m_la) * p.l1 ** 2,
        (m_ua / 2 + p.m_lump + m_la) * p.l1,
        p.n_gear, p.I_M,
        p.B_damp * p.n_gear if damping else 0.0,
    ])
    out.flags.writeable = False
    return out


@njit(cache=True)
def solve3(a, b):
    """Solve ``a x = b`` for a 3x3 ``a``; ``b`` may be a vector or 3xk matrix."""
    c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    det = a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02
    inv = np.empty((3, 3))
    inv[0, 0] = c00
    inv[1, 0] = c01
    inv[2, 0] = c02
    inv[0, 1] = a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]
    inv[1, 1] = a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
    inv[2, 1] = a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]
    inv[0, 2] = a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]
    inv[1, 2] = a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]
    inv[2, 2] = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return np.dot(inv / det, b)


@njit(cache=True)
def det3(a):
    return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))


@njit(cache=True)
def sphere_centres(theta, pv):
    out = np.empty((3, 3))
    for i in range(3):
        reach = pv[EA] + pv[L1] * math.cos(theta[i]) - pv[EB]
        out[i, 0] = RADIAL[i, 0] * reach
        out[i, 1] = RADIAL[i, 1] * reach
        out[i, 2] = -pv[L1] * math.sin(theta[i])
    return out


@njit(cache=True)
def fk(theta, pv):
    """Returns (pose, ok); ok is False when the spheres do not meet."""
    c = sphere_centres(theta, pv)
    ex = c[1] - c[0]
    d = math.sqrt(ex @ ex)
    ex = ex / d
    v2 = c[2] - c[0]
    i = ex @ v2
    ey = v2 - i * ex
    ny = math.sqrt(ey @ ey)
    pose = np.zeros(3)
    if d < 1e-12 or ny < 1e-12:
        return pose, False
    ey = ey / ny
    ez = np.cross(ex, ey)
    j = ey @ v2
    x = d / 2
    y = (i * i + j * j - 2 * i * x) / (2 * j)
    h2 = pv[L2] ** 2 - x * x - y * y
    if h2 < 0:
        return pose, False
    h = math.sqrt(h2)
    base = c[0] + x * ex + y * ey
    a = base + h * ez
    b = base - h * ez
    if a[2] < b[2]:
        return a, True
    return b, True


@njit(cache=True)
def kin(theta, theta_dot, pv):
    """Pose, Jacobian, Jacobian rate and a success flag."""
    pose, ok = fk(theta, pv)
    jac = np.zeros((3, 3))
    jac_dot = np.zeros((3, 3))
    if not ok:
        return pose, jac, jac_dot, False
    l1 = pv[L1]
    s = np.empty((3, 3))
    de = np.empty((3, 3))
    dde = np.empty((3, 3))
    for i in range(3):
        st, ct = math.sin(theta[i]), math.cos(theta[i])
        reach = pv[EA] + l1 * ct - pv[EB]
        for k in range(2):
            s[i, k] = pose[k] - RADIAL[i, k] * reach
            de[i, k] = -l1 * st * RADIAL[i, k]
            dde[i, k] = -l1 * ct * RADIAL[i, k]
        s[i, 2] = pose[2] + l1 * st
        de[i, 2] = -l1 * ct
        dde[i, 2] = l1 * st
    bmat = np.zeros((3, 3))
    for i in range(3):
        bmat[i, i] = s[i] @ de[i]
    if abs(det3(s)) < 1e-14:
        return pose, jac, jac_dot, False
    jac = solve3(s, bmat)
    v = jac @ theta_dot
    s_dot = np.empty((3, 3))
    for i in range(3):
        s_dot[i] = v - de[i] * theta_dot[i]
    bdot = np.zeros((3, 3))
    for i in range(3):
        bdot[i, i] = s_dot[i] @ de[i] + (s[i] @ dde[i]) * theta_dot[i]
    jac_dot = solve3(s, bdot - s_dot @ jac)
    return pose, jac, jac_dot, True


@njit(cache=True)
def terms(theta, theta_dot, pv):
    """Motor-side M, C, G and scalar damping; ok flag last."""
    pose, jac, jac_dot, ok = kin(theta, theta_dot, pv)
    n = pv[NGEAR]
    meff = pv[MEFF]
    jt = np.ascontiguousarray(jac.T)
    M = meff * np.dot(jt, jac) / n
    C = meff * np.dot(jt, jac_dot) / n
    G = np.empty(3)
    for i in range(3):
        M[i, i] += pv[IARM] / n + pv[IM] * n
        G[i] = (-pv[ARM_MOMENT] * GRAVITY * math.cos(theta[i]) + meff * GRAVITY * jac[2, i]) / n
    return M, C, G, pv[BDAMP], ok


@njit(cache=True)
def accel(theta, theta_dot, u, pv):
    M, C, G, b, ok = terms(theta, theta_dot, pv)
    rhs = u - C @ theta_dot - b * theta_dot - G
    return solve3(M, rhs), ok


@njit(cache=True)
def rk4_step(theta, theta_dot, u, dt, pv):
    """One RK4 step of the rigid plant with the torque held constant."""
    a1, ok1 = accel(theta, theta_dot, u, pv)
    v1 = theta_dot
    a2, ok2 = accel(theta + 0.5 * dt * v1, theta_dot + 0.5 * dt * a1, u, pv)
    v2 = theta_dot + 0.5 * dt * a1
    a3, ok3 = accel(theta + 0.5 * dt * v2, theta_dot + 0.5 * dt * a2, u, pv)
    v3 = theta_dot + 0.5 * dt * a2
    a4, ok4 = accel(theta + dt * v3, theta_dot + dt * a3, u, pv)
    v4 = theta_dot + dt * a3
    th = theta + dt / 6 * (v1 + 2 * v2 + 2 * v3 + v4)
    thd = theta_dot + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
    return th, thd, ok1 and ok2 and ok3 and ok4
