"""Independent reference computations used by the tests.

Nothing here imports the package's shaper, modal or controller code; each
routine recomputes its quantity from first principles.
"""
import math

import mpmath
import numpy as np
from scipy.integrate import solve_ivp


def shaper_coefficients_mp(f_n, zeta, k_t, digits=50):
    """Three-impulse amplitudes and lag at extended precision."""
    with mpmath.workdps(digits):
        wn = 2 * mpmath.pi * mpmath.mpf(f_n)
        z = mpmath.mpf(zeta)
        wd = wn * mpmath.sqrt(1 - z * z)
        lag = mpmath.mpf(k_t) * mpmath.pi / wd
        d = mpmath.exp(-z * wn * lag)
        c = mpmath.cos(wd * lag)
        xi = 1 - 2 * d * c + d * d
        return [float(1 / xi), float(-2 * d * c / xi), float(d * d / xi)], float(lag)


def impulse_train_residual(amplitudes, times, omega, zeta):
    """Post-train amplitude ratio from integrating the oscillator numerically.

    Each impulse is a jump in velocity; between impulses the free motion is
    integrated with a tight-tolerance ODE solver. The ratio compares the
    free-vibration envelope after the last impulse with that of a single
    unit impulse evaluated at the same instant.
    """
    wd = omega * math.sqrt(1 - zeta ** 2)

    def rhs(_, y):
        return [y[1], -2 * zeta * omega * y[1] - omega ** 2 * y[0]]

    y = np.zeros(2)
    t_prev = 0.0
    for a, t in zip(amplitudes, times):
        if t > t_prev:
            y = solve_ivp(rhs, (t_prev, t), y, rtol=1e-11, atol=1e-14).y[:, -1]
        y = y + np.array([0.0, a])
        t_prev = t
    env = math.sqrt(y[0] ** 2 + ((y[1] + zeta * omega * y[0]) / wd) ** 2)
    return env * wd


def brute_force_shaper(f_range, k_range, step, zeta, w1=0.5, w2=0.5):
    """Exhaustive scan with uniform weighting, written independently."""
    nf = int(round((f_range[1] - f_range[0]) / step))
    nk = int(round((k_range[1] - k_range[0]) / step))
    f_grid = np.round(f_range[0] + step * np.arange(nf + 1), 10)
    k_grid = np.round(k_range[0] + step * np.arange(nk + 1), 10)
    band = 2 * np.pi * f_grid
    J = np.empty((f_grid.size, k_grid.size))
    wd_band = band * math.sqrt(1 - zeta ** 2)
    for j, k in enumerate(k_grid):
        wn = 2 * np.pi * f_grid[:, None]
        wd = wn * math.sqrt(1 - zeta ** 2)
        T = k * np.pi / wd
        d = np.exp(-zeta * wn * T)
        xi = 1 - 2 * d * np.cos(wd * T) + d * d
        if k == 0:
            amps = [np.ones_like(T), np.zeros_like(T), np.zeros_like(T)]
        else:
            amps = [1 / xi, -2 * d * np.cos(wd * T) / xi, d * d / xi]
        times = [0 * T, T, 2 * T]
        z = sum(a * np.exp((zeta * band + 1j * wd_band) * t) for a, t in zip(amps, times))
        v = np.exp(-zeta * band * times[2]) * np.abs(z)
        J[:, j] = w1 * v.max(axis=1) + w2 * v.mean(axis=1)
    i, j = np.unravel_index(np.argmin(J), J.shape)
    return f_grid[i], k_grid[j], J[i, j]


def euler_bernoulli_local(L, A, Iy, Iz, J, rho, E, G):
    """Closed-form 12x12 element matrices written out entry by entry."""
    k = np.zeros((12, 12))
    m = np.zeros((12, 12))

    def sym(mat, i, j, v):
        mat[i, j] = v
        mat[j, i] = v

    a = E * A / L
    for mat, diag, off in ((k, a, -a), (m, rho * A * L / 3, rho * A * L / 6)):
        sym(mat, 0, 0, diag), sym(mat, 6, 6, diag), sym(mat, 0, 6, off)
    t = G * J / L
    sym(k, 3, 3, t), sym(k, 9, 9, t), sym(k, 3, 9, -t)
    mt = rho * J * L
    sym(m, 3, 3, mt / 3), sym(m, 9, 9, mt / 3), sym(m, 3, 9, mt / 6)
    # bending in x-y: v (1, 7), rz (5, 11)
    c = E * Iz
    sym(k, 1, 1, 12 * c / L ** 3), sym(k, 7, 7, 12 * c / L ** 3), sym(k, 1, 7, -12 * c / L ** 3)
    sym(k, 1, 5, 6 * c / L ** 2), sym(k, 1, 11, 6 * c / L ** 2)
    sym(k, 7, 5, -6 * c / L ** 2), sym(k, 7, 11, -6 * c / L ** 2)
    sym(k, 5, 5, 4 * c / L), sym(k, 11, 11, 4 * c / L), sym(k, 5, 11, 2 * c / L)
    # bending in x-z: w (2, 8), ry (4, 10)
    c = E * Iy
    sym(k, 2, 2, 12 * c / L ** 3), sym(k, 8, 8, 12 * c / L ** 3), sym(k, 2, 8, -12 * c / L ** 3)
    sym(k, 2, 4, -6 * c / L ** 2), sym(k, 2, 10, -6 * c / L ** 2)
    sym(k, 8, 4, 6 * c / L ** 2), sym(k, 8, 10, 6 * c / L ** 2)
    sym(k, 4, 4, 4 * c / L), sym(k, 10, 10, 4 * c / L), sym(k, 4, 10, 2 * c / L)
    q = rho * A * L / 420
    sym(m, 1, 1, 156 * q), sym(m, 7, 7, 156 * q), sym(m, 1, 7, 54 * q)
    sym(m, 1, 5, 22 * L * q), sym(m, 1, 11, -13 * L * q)
    sym(m, 7, 5, 13 * L * q), sym(m, 7, 11, -22 * L * q)
    sym(m, 5, 5, 4 * L * L * q), sym(m, 11, 11, 4 * L * L * q), sym(m, 5, 11, -3 * L * L * q)
    sym(m, 2, 2, 156 * q), sym(m, 8, 8, 156 * q), sym(m, 2, 8, 54 * q)
    sym(m, 2, 4, -22 * L * q), sym(m, 2, 10, 13 * L * q)
    sym(m, 8, 4, -13 * L * q), sym(m, 8, 10, 22 * L * q)
    sym(m, 4, 4, 4 * L * L * q), sym(m, 10, 10, 4 * L * L * q), sym(m, 4, 10, -3 * L * L * q)
    return m, k


def damped_envelope(x, xd, omega, zeta):
    wd = omega * np.sqrt(1 - zeta ** 2)
    return np.sqrt(x ** 2 + ((xd + zeta * omega * x) / wd) ** 2)
