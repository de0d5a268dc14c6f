"""Frozen-configuration modal analysis of the flexible Delta robot.

Each lower arm is one 3D Euler-Bernoulli element running from its elbow to
its platform-side tip. The elbow node is carried by the upper arm, the tip
node keeps six coordinates, and the platform adds six more. Together with the
motor-side and arm-side joint angles this gives 48 open-chain coordinates,
reduced to 30 independent ones by the loop-closure compatibility map.

Coordinate layout of ``q_u`` (48): ``theta_r`` (3), ``theta_f`` (3), six tip
blocks ``[dx, dy, dz, rx, ry, rz]`` ordered chain-major, platform ``d_p`` (6).
Coordinate layout of ``q`` (30): ``theta_r``, ``theta_f``, six tip rotations
(18), ``d_p``.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import logging
import math

import numpy as np
from scipy import linalg, signal
from scipy.optimize import brentq

from .errors import DeltaError, IndefiniteMass, RankDeficiency
from .kinematics import chain_frames, elbow_derivatives, elbow_points, inverse_kinematics
from .trajectory import CENTRE_PLANE as CENTRE_Z

log = logging.getLogger(__name__)

N_UNCONSTRAINED = 48
N_REDUCED = 30
RIGID_LEAK_HZ = 0.1
DEFAULT_ZETA = 0.075
TIP0 = 6
MP0 = 42
# platform rotation vector w = I_delta @ delta_p
I_DELTA = np.fliplr(np.eye(3))


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass
class BeamElement:
    length: float
    area: float
    I_y: float
    I_z: float
    J: float
    rho: float
    E: float
    G: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))   # rows: local axes

    @classmethod
    def lower_arm(cls, params, start, end):
        axis = np.asarray(end, float) - np.asarray(start, float)
        length = float(np.linalg.norm(axis))
        return cls(length, params.area_lower, params.second_moment_lower,
                   params.second_moment_lower, params.polar_moment_lower, params.rho_r,
                   params.E_r, params.shear_modulus, local_frame(axis))

    def local_matrices(self):
        return beam_element_matrices(self.length, self.area, self.I_y, self.I_z, self.J,
                                     self.rho, self.E, self.G)

    def global_matrices(self):
        m, k = self.local_matrices()
        T = np.kron(np.eye(4), self.rotation)
        return T.T @ m @ T, T.T @ k @ T


def local_frame(axis):
    """Rotation whose first row is the unit ``axis``."""
    ex = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0]) if abs(ex[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    ey = np.cross(helper, ex)
    ey /= np.linalg.norm(ey)
    return np.vstack([ex, ey, np.cross(ex, ey)])


def _hermite(L):
    stiff = np.array([[12, 6 * L, -12, 6 * L],
                      [6 * L, 4 * L * L, -6 * L, 2 * L * L],
                      [-12, -6 * L, 12, -6 * L],
                      [6 * L, 2 * L * L, -6 * L, 4 * L * L]]) / L ** 3
    mass = np.array([[156, 22 * L, 54, -13 * L],
                     [22 * L, 4 * L * L, 13 * L, -3 * L * L],
                     [54, 13 * L, 156, -22 * L],
                     [-13 * L, -3 * L * L, -22 * L, 4 * L * L]]) * L / 420
    return stiff, mass


def beam_element_matrices(L, A, I_y, I_z, J, rho, E, G):
    """Local consistent-mass and stiffness matrices, DOFs ``[u v w rx ry rz] x 2``."""
    m = np.zeros((12, 12))
    k = np.zeros((12, 12))
    pair = np.array([[1.0, -1.0], [-1.0, 1.0]])
    ax = [0, 6]
    tor = [3, 9]
    k[np.ix_(ax, ax)] = E * A / L * pair
    k[np.ix_(tor, tor)] = G * J / L * pair
    m[np.ix_(ax, ax)] = rho * A * L / 6 * np.array([[2.0, 1.0], [1.0, 2.0]])
    m[np.ix_(tor, tor)] = rho * J * L / 6 * np.array([[2.0, 1.0], [1.0, 2.0]])
    hk, hm = _hermite(L)
    xy = [1, 5, 7, 11]           # v, rz
    k[np.ix_(xy, xy)] = E * I_z * hk
    m[np.ix_(xy, xy)] = rho * A * hm
    # the x-z plane sees the rotation with the opposite sign
    flip = np.diag([1.0, -1.0, 1.0, -1.0])
    xz = [2, 4, 8, 10]           # w, ry
    k[np.ix_(xz, xz)] = E * I_y * flip @ hk @ flip
    m[np.ix_(xz, xz)] = rho * A * flip @ hm @ flip
    return m, k


@dataclass
class ArmGeometry:
    """Per-lower-arm attachment data for one configuration."""
    chain: int
    elbow: np.ndarray
    tip: np.ndarray
    r_b: np.ndarray          # tip position relative to the platform centre
    elbow_rate: np.ndarray   # d elbow / d theta
    axis: np.ndarray         # upper-arm rotation axis


def arm_geometry(params, theta, pose):
    radial, tangent = chain_frames(params)
    elbows = elbow_points(theta, params)
    d_elbow, _ = elbow_derivatives(np.asarray(theta, float), params)
    arms = []
    for i in range(3):
        for side in (-0.5, 0.5):
            off = side * params.pair_width * tangent[i]
            r_b = params.e_b * radial[i] + off
            arms.append(ArmGeometry(i, elbows[i] + off, np.asarray(pose) + r_b, r_b,
                                    d_elbow[i], tangent[i]))
    return arms


def _configuration(params, theta=None, pose=None):
    if pose is None:
        raise ValueError("a platform pose is required")
    if theta is None:
        theta = inverse_kinematics(pose, params)
    return np.asarray(theta, float), np.asarray(pose, float)


def assemble_unconstrained(params, pose, theta=None, servo_stiffness=None):
    """Open-chain ``(M_u, K_u)``, both 48 x 48, at a frozen configuration."""
    theta, pose = _configuration(params, theta, pose)
    k_s = params.servo_stiffness if servo_stiffness is None else servo_stiffness
    if not k_s > 0:
        raise ValueError("servo stiffness must be positive")
    M = np.zeros((N_UNCONSTRAINED, N_UNCONSTRAINED))
    K = np.zeros_like(M)
    n = params.n_gear
    arm_inertia = params.mass_upper_arm * params.l1 ** 2 / 3 + params.m_lump * params.l1 ** 2
    for i in range(3):
        M[i, i] += params.I_M * n * n
        M[3 + i, 3 + i] += arm_inertia
        idx = [i, 3 + i]
        K[np.ix_(idx, idx)] += k_s * np.array([[1.0, -1.0], [-1.0, 1.0]])
    for j, arm in enumerate(arm_geometry(params, theta, pose)):
        me, ke = BeamElement.lower_arm(params, arm.elbow, arm.tip).global_matrices()
        # elbow node follows the arm-side joint angle, tip node is free
        L = np.zeros((12, N_UNCONSTRAINED))
        L[0:3, 3 + arm.chain] = arm.elbow_rate
        L[3:6, 3 + arm.chain] = arm.axis
        L[6:12, TIP0 + 6 * j:TIP0 + 6 * j + 6] = np.eye(6)
        M += L.T @ me @ L
        K += L.T @ ke @ L
    mp = slice(MP0, MP0 + 3)
    M[mp, mp] += params.m_p * np.eye(3)
    rot = slice(MP0 + 3, MP0 + 6)
    M[rot, rot] += I_DELTA.T @ np.diag([params.I_px, params.I_py, params.I_pz]) @ I_DELTA
    return M, K


def build_compatibility(params, pose, theta=None):
    """Compatibility matrix ``T_dc`` (48 x 30) with ``q_u = T_dc q``."""
    theta, pose = _configuration(params, theta, pose)
    T = np.zeros((N_UNCONSTRAINED, N_REDUCED))
    T[0:6, 0:6] = np.eye(6)
    for j, arm in enumerate(arm_geometry(params, theta, pose)):
        row = TIP0 + 6 * j
        T[row:row + 3, 24:27] = np.eye(3)
        T[row:row + 3, 27:30] = -skew(arm.r_b) @ I_DELTA
        T[row + 3:row + 6, 6 + 3 * j:9 + 3 * j] = np.eye(3)
    T[MP0:MP0 + 6, 24:30] = np.eye(6)
    rank = np.linalg.matrix_rank(T)
    if rank < N_REDUCED:
        raise RankDeficiency(f"compatibility matrix has rank {rank} < {N_REDUCED}")
    return T


@dataclass
class ModalModel:
    frequencies: np.ndarray        # Hz, ascending
    mode_shapes: np.ndarray        # (27, modes), mass normalised, clamped coordinates
    modal_damping: np.ndarray
    participation: np.ndarray      # (modes, 3) forcing per unit joint acceleration
    compatibility: np.ndarray = None

    @property
    def omega(self):
        return 2 * np.pi * self.frequencies

    def truncated(self, count):
        return ModalModel(self.frequencies[:count], self.mode_shapes[:, :count],
                          self.modal_damping[:count], self.participation[:count],
                          self.compatibility)


def modal_analysis(M_u, K_u, T_dc, zeta=DEFAULT_ZETA):
    """Reduce, clamp the motor-side angles and solve ``K phi = w^2 M phi``."""
    M = T_dc.T @ M_u @ T_dc
    K = T_dc.T @ K_u @ T_dc
    free = slice(3, N_REDUCED)
    Mff, Kff = M[free, free], K[free, free]
    Mfr, Kfr = M[free, :3], K[free, :3]
    try:
        linalg.cholesky(Mff)
    except linalg.LinAlgError as exc:
        raise IndefiniteMass("reduced mass matrix is not positive definite") from exc
    lam, phi = linalg.eigh(Kff, Mff)
    lam = np.clip(lam, 0.0, None)
    freq = np.sqrt(lam) / (2 * np.pi)
    keep = freq >= RIGID_LEAK_HZ
    freq, phi = freq[keep], phi[:, keep]
    # quasi-static follow of the structure when the motors move
    follow = -np.linalg.solve(Kff, Kfr)
    participation = phi.T @ (Mff @ follow + Mfr)
    return ModalModel(freq, phi, np.full(freq.size, float(zeta)), participation, T_dc)


def analyse_pose(params, pose, servo_stiffness=None, zeta=DEFAULT_ZETA):
    theta = inverse_kinematics(pose, params)
    M_u, K_u = assemble_unconstrained(params, pose, theta, servo_stiffness)
    return modal_analysis(M_u, K_u, build_compatibility(params, pose, theta), zeta)


def first_frequency(params, pose, servo_stiffness=None):
    return float(analyse_pose(params, pose, servo_stiffness).frequencies[0])


def calibrate_servo_stiffness(params, target_hz=20.0, pose=(0.0, 0.0, CENTRE_Z),
                              bracket=(1e2, 1e7)):
    """Servo stiffness that places the first mode at ``target_hz`` for ``pose``."""
    f = lambda log_k: first_frequency(params, pose, math.exp(log_k)) - target_hz
    return math.exp(brentq(f, *np.log(bracket), xtol=1e-10))


@dataclass
class FrequencyMap:
    poses: np.ndarray
    f1: np.ndarray                 # NaN where the analysis failed
    weights: np.ndarray
    failures: list = field(default_factory=list)

    def valid(self):
        return np.isfinite(self.f1)

    @property
    def range(self):
        ok = self.f1[self.valid()]
        return float(ok.min()), float(ok.max())

    def weighting(self):
        """``(frequency, weight)`` pairs for the shaper objective."""
        ok = self.valid()
        return list(zip(self.f1[ok], self.weights[ok]))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", "f1_Hz"])
            for (x, y, z), f in zip(self.poses, self.f1):
                w.writerow([f"{x:.6f}", f"{y:.6f}", f"{z:.6f}", f"{f:.6f}"])


def _map_worker(args):
    params, pose = args
    try:
        return first_frequency(params, pose), None
    except (DeltaError, np.linalg.LinAlgError, ValueError) as exc:
        return math.nan, f"{tuple(np.round(pose, 6))}: {exc}"


def frequency_map(params, samples, workers=1):
    """First natural frequency at every workspace sample; failures are kept as NaN."""
    jobs = [(params, p) for p in samples.poses]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_map_worker, jobs, chunksize=16))
    else:
        out = [_map_worker(j) for j in jobs]
    f1 = np.array([o[0] for o in out])
    failures = [o[1] for o in out if o[1] is not None]
    for msg in failures:
        log.warning("frequency map sample failed: %s", msg)
    return FrequencyMap(np.asarray(samples.poses), f1, np.asarray(samples.weights), failures)


def envelope(x, x_dot, omega, zeta):
    """Amplitude of the free damped oscillation passing through ``(x, x_dot)``."""
    wd = omega * np.sqrt(1 - np.square(zeta))
    return np.sqrt(x ** 2 + ((x_dot + zeta * omega * x) / wd) ** 2)


@dataclass
class OscillatorResponse:
    t: np.ndarray
    x: np.ndarray                # (N, modes)
    x_dot: np.ndarray
    t_end: float
    residual: np.ndarray         # per-mode residual amplitude after t_end


def oscillator_bank(omega, zeta, forcing, dt):
    """Exact zero-order-hold response of ``x'' + 2 zeta w x' + w^2 x = f`` per column."""
    forcing = np.atleast_2d(np.asarray(forcing, float).T).T
    t = dt * np.arange(forcing.shape[0])
    x = np.zeros_like(forcing)
    xd = np.zeros_like(forcing)
    for j, (w, z) in enumerate(zip(np.atleast_1d(omega), np.atleast_1d(zeta))):
        A = np.array([[0.0, 1.0], [-w * w, -2 * z * w]])
        sys = signal.StateSpace(A, [[0.0], [1.0]], np.eye(2), np.zeros((2, 1)))
        _, _, states = signal.lsim(sys, forcing[:, j], t, interp=False)
        states = states.reshape(-1, 2)
        x[:, j], xd[:, j] = states[:, 0], states[:, 1]
    return t, x, xd


def residual_oscillator_response(modal, joint_accel, dt, t_end=None, modes=3):
    """Drive the first ``modes`` modes with joint accelerations, measure what is left.

    The trace is padded with rest until ``t_end + 3/(zeta w_1)``. Residual
    amplitude is the largest free-vibration envelope after ``t_end``.
    """
    bank = modal.truncated(modes)
    acc = np.asarray(joint_accel, float).reshape(len(joint_accel), -1)
    if t_end is None:
        t_end = (acc.shape[0] - 1) * dt
    settle = 3.0 / (bank.modal_damping[0] * bank.omega[0])
    total = int(math.ceil((t_end + settle) / dt)) + 1
    padded = np.zeros((max(total, acc.shape[0]), acc.shape[1]))
    padded[:acc.shape[0]] = acc
    forcing = -padded @ bank.participation.T
    t, x, xd = oscillator_bank(bank.omega, bank.modal_damping, forcing, dt)
    after = t >= t_end - 1e-12
    env = envelope(x[after], xd[after], bank.omega, bank.modal_damping)
    return OscillatorResponse(t, x, xd, float(t_end), env.max(axis=0))


def connection_point_motion(modal, response):
    """Tip translations along z of the six lower-arm connection points."""
    q = np.zeros((response.x.shape[0], N_REDUCED))
    q[:, 3:] = response.x @ modal.mode_shapes[:, :response.x.shape[1]].T
    q_u = q @ modal.compatibility.T
    return q_u[:, [TIP0 + 6 * j + 2 for j in range(6)]]
