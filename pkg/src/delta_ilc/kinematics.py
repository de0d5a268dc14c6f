"""Delta robot position/velocity kinematics and workspace sampling.

Frame: origin at the centre of the fixed base, z pointing up, so the moving
platform (MP) hangs at negative z. Chain ``i`` lies in the vertical plane at
azimuth ``2*pi*i/3``. Joint angle ``theta_i`` is measured from the horizontal,
positive downward.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import _core
from .errors import (EmptyWorkspace, NoIntersection, SingularConfiguration,
                     SingularJacobian, UnreachablePose)

SINGULAR_TOL = 1e-10
COND_MAX = 1e8
AZIMUTHS = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])


@lru_cache(maxsize=64)
def _frames(params):
    c, s = np.cos(AZIMUTHS), np.sin(AZIMUTHS)
    radial = np.stack([c, s, np.zeros(3)], axis=1)
    tangential = np.stack([-s, c, np.zeros(3)], axis=1)
    radial.flags.writeable = False
    tangential.flags.writeable = False
    return radial, tangential


def chain_frames(params):
    """Radial and tangential (joint-axis) unit vectors of the three chains, row-wise."""
    return _frames(params)


def elbow_points(theta, params):
    radial, _ = _frames(params)
    theta = np.asarray(theta, dtype=float)
    reach = params.e_a + params.l1 * np.cos(theta)
    out = radial * reach[:, None]
    out[:, 2] = -params.l1 * np.sin(theta)
    return out


def elbow_derivatives(theta, params):
    """First and second derivatives of each elbow point w.r.t. its own joint angle."""
    radial, _ = _frames(params)
    st, ct = np.sin(theta), np.cos(theta)
    d1 = radial * (-params.l1 * st)[:, None]
    d1[:, 2] = -params.l1 * ct
    d2 = radial * (-params.l1 * ct)[:, None]
    d2[:, 2] = params.l1 * st
    return d1, d2


def inverse_kinematics(pose, params):
    """Joint angles placing the MP centre at ``pose`` (elbow-out branch)."""
    p = np.asarray(pose, dtype=float)
    radial, tangential = _frames(params)
    q = p[None, :] + (params.e_b - params.e_a) * radial
    r = np.einsum("ij,ij->i", q, radial)
    t = np.einsum("ij,ij->i", q, tangential)
    z = q[:, 2]
    l1, l2 = params.l1, params.l2
    k = (r * r + t * t + z * z + l1 * l1 - l2 * l2) / (2 * l1)
    rad = np.hypot(r, z)
    theta = np.empty(3)
    for i in range(3):
        if rad[i] == 0.0:
            raise UnreachablePose(f"chain {i}: pose on the joint axis")
        ratio = k[i] / rad[i]
        disc = 1.0 - ratio * ratio
        if disc < 0.0:
            raise UnreachablePose(f"chain {i} cannot reach {p.tolist()}")
        if disc < SINGULAR_TOL:
            raise SingularConfiguration(f"chain {i} fully stretched or folded at {p.tolist()}")
        theta[i] = -math.atan2(z[i], r[i]) - math.acos(ratio)
    return (theta + np.pi) % (2 * np.pi) - np.pi


def forward_kinematics(theta, params):
    """MP centre from joint angles: lower intersection of three spheres."""
    pose, ok = _core.fk(np.asarray(theta, dtype=float), _core.pack(params, False))
    if not ok:
        raise NoIntersection(f"spheres do not meet for theta={np.asarray(theta).tolist()}")
    return pose


def constraint_vectors(theta, pose, params):
    """Rows ``s_i``: from elbow ``i`` to its MP attachment point (lower-arm direction * l2)."""
    radial, _ = _frames(params)
    return np.asarray(pose)[None, :] + params.e_b * radial - elbow_points(theta, params)


@dataclass
class KinematicState:
    pose: np.ndarray
    velocity: np.ndarray
    jac: np.ndarray
    jac_dot: np.ndarray


def kinematic_state(theta, theta_dot, params):
    """Pose, MP velocity, Jacobian and its time derivative in one pass."""
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    pose, jac, jac_dot, ok = _core.kin(theta, theta_dot, _core.pack(params, False))
    if not ok:
        forward_kinematics(theta, params)
        raise SingularConfiguration("parallel singularity")
    return KinematicState(pose, jac @ theta_dot, jac, jac_dot)


def jacobian(theta, params, cond_max=COND_MAX):
    """3x3 matrix ``J`` with ``p_dot = J @ theta_dot``."""
    jac = kinematic_state(theta, np.zeros(3), params).jac
    cond = np.linalg.cond(jac)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularJacobian(f"Jacobian condition number {cond:.3g} exceeds {cond_max:.3g}")
    return jac


@dataclass
class WorkspaceSamples:
    poses: np.ndarray      # (N, 3)
    weights: np.ndarray    # (N,) area represented by each sample, m^2
    plane_area: dict       # z -> total reachable area on that plane


def is_reachable(pose, params):
    try:
        theta = inverse_kinematics(pose, params)
        jacobian(theta, params)
    except (UnreachablePose, SingularConfiguration):
        return False
    return True


def sample_workspace(params, spacing=0.02, z_planes=None, extent=None):
    """Reachable points of square grids laid on horizontal planes.

    ``extent`` is the half-width of each square grid; it defaults to the
    largest horizontal reach ``e_a - e_b + l1 + l2``.
    """
    if spacing <= 0:
        raise ValueError("grid spacing must be positive")
    if z_planes is None:
        z_planes = np.linspace(-1.05, -0.65, 5)
    if extent is None:
        extent = params.e_a - params.e_b + params.l1 + params.l2
    n = int(math.floor(extent / spacing))
    axis = spacing * np.arange(-n, n + 1)
    poses, weights, areas = [], [], {}
    cell = spacing * spacing
    for z in z_planes:
        count = 0
        for x in axis:
            for y in axis:
                pose = np.array([x, y, float(z)])
                if is_reachable(pose, params):
                    poses.append(pose)
                    weights.append(cell)
                    count += 1
        areas[float(z)] = count * cell
    if not poses:
        raise EmptyWorkspace("no reachable grid sample")
    return WorkspaceSamples(np.array(poses), np.array(weights), areas)
