"""Rest-to-rest reference trajectories mapped to joint space.

Task-space paths are time-scaled with the quintic ``10s^3 - 15s^4 + 6s^5``
and pushed through the kinematics sample by sample:
``theta_dot = J^-1 p_dot`` and ``theta_ddot = J^-1 (p_ddot - J_dot theta_dot)``.
"""
from dataclasses import dataclass
import csv

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .kinematics import inverse_kinematics, kinematic_state

CENTRE_PLANE = -0.8151


@dataclass
class ReferenceTrajectory:
    t: np.ndarray
    theta: np.ndarray        # (N, 3)
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    origin: np.ndarray       # task-space start pose
    name: str = "reference"

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    @property
    def max_rate(self):
        return float(np.max(np.abs(self.theta_dot)))

    def __len__(self):
        return self.t.size


def quintic(tau):
    """Position, velocity, acceleration of the rest-to-rest quintic on tau in [0, 1]."""
    tau = np.clip(tau, 0.0, 1.0)
    s = tau ** 3 * (10 - 15 * tau + 6 * tau ** 2)
    ds = 30 * tau ** 2 * (1 - tau) ** 2
    dds = 60 * tau * (1 - tau) * (1 - 2 * tau)
    return s, ds, dds


def time_grid(duration, dt):
    n = int(round(duration / dt))
    if abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError("duration must be an integer multiple of dt")
    return dt * np.arange(n + 1)


def joint_space(t, pos, vel, acc, params, name="reference"):
    """Map sampled task-space motion to joint angles, rates and accelerations."""
    n = t.size
    theta = np.empty((n, 3))
    theta_dot = np.empty((n, 3))
    theta_ddot = np.empty((n, 3))
    for k in range(n):
        th = inverse_kinematics(pos[k], params)
        ks = kinematic_state(th, np.zeros(3), params)
        thd = np.linalg.solve(ks.jac, vel[k])
        ks = kinematic_state(th, thd, params)
        theta[k] = th
        theta_dot[k] = thd
        theta_ddot[k] = np.linalg.solve(ks.jac, acc[k] - ks.jac_dot @ thd)
    return ReferenceTrajectory(t, theta, theta_dot, theta_ddot, np.array(pos[0]), name)


def _waypoint_path(waypoints, durations, dt):
    """Straight segments between waypoints, each with its own quintic profile."""
    waypoints = np.asarray(waypoints, dtype=float)
    t = time_grid(sum(durations), dt)
    pos = np.repeat(waypoints[-1:], t.size, axis=0)
    vel = np.zeros_like(pos)
    acc = np.zeros_like(pos)
    start = 0.0
    for a, b, dur in zip(waypoints[:-1], waypoints[1:], durations):
        mask = (t >= start - 1e-12) & (t <= start + dur + 1e-12)
        s, ds, dds = quintic((t[mask] - start) / dur)
        delta = b - a
        pos[mask] = a + s[:, None] * delta
        vel[mask] = (ds / dur)[:, None] * delta
        acc[mask] = (dds / dur ** 2)[:, None] * delta
        start += dur
    return t, pos, vel, acc


def pick_and_place(params, span=0.06, lift=0.02, cycle_time=3.0, z_plane=CENTRE_PLANE,
                   dt=1e-3, start=(0.0, 0.0)):
    """Door-shaped move: lift, traverse ``span`` along x, lower."""
    x0, y0 = start
    waypoints = [(x0, y0, z_plane), (x0, y0, z_plane + lift),
                 (x0 + span, y0, z_plane + lift), (x0 + span, y0, z_plane)]
    durations = (0.25 * cycle_time, 0.5 * cycle_time, 0.25 * cycle_time)
    t, pos, vel, acc = _waypoint_path(waypoints, durations, dt)
    return joint_space(t, pos, vel, acc, params, "pick_and_place")


def square_trajectory(params, side=0.04, z_plane=CENTRE_PLANE, cycle_time=4.0, dt=1e-3):
    """Closed square starting and ending at the plane centre, corners at rest."""
    corners = [(0, 0), (side, 0), (side, side), (0, side), (0, 0)]
    waypoints = [(x, y, z_plane) for x, y in corners]
    t, pos, vel, acc = _waypoint_path(waypoints, (cycle_time / 4,) * 4, dt)
    return joint_space(t, pos, vel, acc, params, "square")


def butterfly_curve(phi):
    """Butterfly radial law ``r = exp(cos phi) - 2 cos 4phi``, origin-shifted, with derivatives.

    Returns (xy, dxy/dphi, d2xy/dphi2), each ``(len(phi), 2)``.
    """
    phi = np.asarray(phi, dtype=float)
    r = np.exp(np.cos(phi)) - 2 * np.cos(4 * phi)
    dr = -np.sin(phi) * np.exp(np.cos(phi)) + 8 * np.sin(4 * phi)
    ddr = (np.sin(phi) ** 2 - np.cos(phi)) * np.exp(np.cos(phi)) + 32 * np.cos(4 * phi)
    s, c = np.sin(phi), np.cos(phi)
    r0 = np.e - 2
    xy = np.stack([r * s, r * c - r0], axis=-1)
    d1 = np.stack([dr * s + r * c, dr * c - r * s], axis=-1)
    d2 = np.stack([ddr * s + 2 * dr * c - r * s, ddr * c - 2 * dr * s - r * c], axis=-1)
    return xy, d1, d2


def _arc_length_inverse(targets, phi_table, s_table, speed):
    phi = np.interp(targets, s_table, phi_table)
    for _ in range(6):
        # Newton on s(phi) - target using the table as s(phi)
        s_here = np.interp(phi, phi_table, s_table)
        phi = phi - (s_here - targets) / speed(phi)
    return phi


def butterfly_trajectory(params, scale=0.008, z_plane=CENTRE_PLANE, cycle_time=6.0, dt=1e-3,
                         table_points=200001):
    """Butterfly curve traced once with a quintic speed profile along arc length."""
    phi_table = np.linspace(0.0, 2 * np.pi, table_points)
    _, d1, _ = butterfly_curve(phi_table)
    speed_table = np.hypot(d1[:, 0], d1[:, 1])
    s_table = cumulative_trapezoid(speed_table, phi_table, initial=0.0)
    length = s_table[-1]

    def speed(phi):
        _, dd, _ = butterfly_curve(phi)
        return np.hypot(dd[:, 0], dd[:, 1])

    t = time_grid(cycle_time, dt)
    s, ds, dds = quintic(t / cycle_time)
    arc = s * length
    arc_dot = ds * length / cycle_time
    arc_ddot = dds * length / cycle_time ** 2
    phi = _arc_length_inverse(arc, phi_table, s_table, speed)
    phi[0], phi[-1] = 0.0, 2 * np.pi
    xy, d1, d2 = butterfly_curve(phi)
    sp = np.hypot(d1[:, 0], d1[:, 1])
    phi_dot = arc_dot / sp
    sp_rate = np.einsum("ij,ij->i", d1, d2) / sp
    phi_ddot = (arc_ddot - sp_rate * phi_dot ** 2) / sp
    pos = np.column_stack([scale * xy, np.full(t.size, z_plane)])
    vel = np.column_stack([scale * d1 * phi_dot[:, None], np.zeros(t.size)])
    acc = np.column_stack([scale * (d2 * phi_dot[:, None] ** 2 + d1 * phi_ddot[:, None]),
                           np.zeros(t.size)])
    pos[-1, :2] = pos[0, :2]
    return joint_space(t, pos, vel, acc, params, "butterfly")


def write_csv(traj, path):
    header = ["t"] + [f"{q}{i}" for q in ("theta", "theta_dot", "theta_ddot") for i in (1, 2, 3)]
    data = np.column_stack([traj.t, traj.theta, traj.theta_dot, traj.theta_ddot])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(data.tolist())


def read_csv(path, name=None):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ReferenceTrajectory(data[:, 0], data[:, 1:4], data[:, 4:7], data[:, 7:10],
                               np.full(3, np.nan), name or str(path))
